// caai: runs CAAI experiments and aggregates repetition reports.
//
//   caai --config config/default.json [--out DIR] [--mode det|conc] [--seed-offset N]
//   caai aggregate rep_01.csv rep_02.csv ... [-o aggregate.csv]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include "caai/workflow/config.hpp"
#include "caai/workflow/runner.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeFailure = 3;

int run_aggregate(const std::vector<std::string>& inputs, const std::string& output) {
  std::vector<std::filesystem::path> files(inputs.begin(), inputs.end());
  const std::string csv = caai::workflow::aggregate_files(files);
  if (output.empty()) {
    std::cout << csv;
    return kOk;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out || !(out << csv)) {
    std::cerr << "caai: cannot write " << output << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

int run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir,
                   const std::optional<std::string>& mode, std::uint64_t seed_offset) {
  using namespace caai::workflow;
  ExperimentConfig cfg;
  RunOptions opts;
  try {
    cfg = load_config(config_path);
    opts.mode = mode ? parse_mode(*mode) : cfg.mode;
  } catch (const ConfigError& e) {
    std::cerr << "caai: config error: " << e.what() << "\n";
    return kConfigError;
  }
  opts.seed_offset = seed_offset;
  const std::filesystem::path dir = out_dir ? std::filesystem::path(*out_dir) : cfg.output_dir;
  const auto summary = caai::workflow::run_experiment(cfg, dir, opts);
  int recalibrations = 0;
  int refused = 0;
  for (const auto& r : summary.repetitions) {
    recalibrations += static_cast<int>(r.recalibration_cycles.size());
    refused += r.rejected_adaptions;
  }
  std::cout << "caai: " << to_string(cfg.experiment) << " experiment, " << cfg.n_repetitions
            << " repetitions x " << cfg.n_cycles << " cycles (" << to_string(opts.mode) << ")\n"
            << "caai: re-calibrations " << recalibrations << ", adaptions refused by plant " << refused
            << "\n";
  for (const auto& f : summary.files) std::cout << "caai: wrote " << f.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cognitive architecture for AI pipelines on a simulated popcorn plant"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
  std::uint64_t seed_offset = 0;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--out", out_dir, "Output directory, overrides output_dir");
  app.add_option("--mode", mode, "Execution mode")->check(CLI::IsMember({"det", "conc"}));
  app.add_option("--seed-offset", seed_offset, "Added to every repetition seed");

  auto* agg = app.add_subcommand("aggregate", "Median-aggregate repetition CSVs");
  std::vector<std::string> inputs;
  std::string agg_out;
  agg->add_option("files", inputs, "Repetition CSV files")->required()->check(CLI::ExistingFile);
  agg->add_option("-o,--output", agg_out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (agg->parsed()) return run_aggregate(inputs, agg_out);
    if (config_path.empty()) {
      std::cerr << "caai: --config is required\n";
      return kConfigError;
    }
    return run_experiment(config_path, out_dir, mode, seed_offset);
  } catch (const caai::workflow::ConfigError& e) {
    std::cerr << "caai: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "caai: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
