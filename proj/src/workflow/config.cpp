#include "caai/workflow/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace caai::workflow {

using nlohmann::json;

Mode parse_mode(std::string_view s) {
  if (s == "det" || s == "deterministic") return Mode::deterministic;
  if (s == "conc" || s == "concurrent") return Mode::concurrent;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected det or conc)");
}

std::string_view to_string(Mode m) { return m == Mode::deterministic ? "det" : "conc"; }

Experiment parse_experiment(std::string_view s) {
  if (s == "workflow") return Experiment::workflow;
  if (s == "benchmark") return Experiment::benchmark;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

std::string_view to_string(Experiment e) {
  return e == Experiment::workflow ? "workflow" : "benchmark";
}

void ExperimentConfig::validate() const {
  try {
    simulator.validate();
    knowledge.validate();
    cognition.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(plant_bounds.lo < plant_bounds.hi)) throw ConfigError("simulator bounds are not well-ordered");
  if (!plant_bounds.contains(initial_x)) throw ConfigError("initial_x lies outside the plant bounds");
  auto kb_x = knowledge.bounds.find("x");
  if (kb_x == knowledge.bounds.end()) throw ConfigError("knowledge base has no bounds for x");
  if (kb_x->second.lo < plant_bounds.lo || kb_x->second.hi > plant_bounds.hi)
    throw ConfigError("knowledge-base bounds for x exceed the plant bounds");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("objective weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("objective weights must sum to 1");
  if (design.n_initial < 2) throw ConfigError("design.n_initial must be >= 2");
  if (n_cycles < design.n_initial)
    throw ConfigError("n_cycles (" + std::to_string(n_cycles) + ") must be >= design.n_initial (" +
                      std::to_string(design.n_initial) + ")");
  if (n_repetitions < 1) throw ConfigError("n_repetitions must be >= 1");
  if (seeds.size() != static_cast<std::size_t>(n_repetitions))
    throw ConfigError("seeds must list exactly n_repetitions values");
  for (const auto& d : simulator.drift)
    if (d.cycle < 1 || d.cycle > n_cycles) throw ConfigError("drift cycle outside the run");
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

void parse_simulator(const json& j, ExperimentConfig& cfg) {
  reject_unknown(j,
                 {"feed_rate", "unpopped_mean", "unpopped_sd", "box_requirement", "base_time",
                  "time_per_second", "handling_time_per_gram", "base_energy", "energy_per_second",
                  "shortfall_penalty", "bounds", "initial_x", "drift"},
                 "simulator");
  auto& s = cfg.simulator;
  s.feed_rate = j.value("feed_rate", s.feed_rate);
  s.unpopped_mean = j.value("unpopped_mean", s.unpopped_mean);
  s.unpopped_sd = j.value("unpopped_sd", s.unpopped_sd);
  s.box_requirement = j.value("box_requirement", s.box_requirement);
  s.base_time = j.value("base_time", s.base_time);
  s.time_per_second = j.value("time_per_second", s.time_per_second);
  s.handling_time_per_gram = j.value("handling_time_per_gram", s.handling_time_per_gram);
  s.base_energy = j.value("base_energy", s.base_energy);
  s.energy_per_second = j.value("energy_per_second", s.energy_per_second);
  s.shortfall_penalty = j.value("shortfall_penalty", s.shortfall_penalty);
  if (j.contains("bounds"))
    cfg.plant_bounds = {j["bounds"].at(0).get<double>(), j["bounds"].at(1).get<double>()};
  cfg.initial_x = j.value("initial_x", cfg.plant_bounds.lo);
  if (j.contains("drift"))
    for (const auto& d : j["drift"]) {
      try {
        s.drift.push_back({d.at("cycle").get<int>(),
                           vps::parse_drift_field(d.at("field").get<std::string>()),
                           d.at("value").get<double>()});
      } catch (const vps::SimulatorError& e) {
        throw ConfigError(e.what());
      }
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    reject_unknown(j,
                   {"simulator", "weights", "goal", "design", "knowledge", "knowledge_file",
                    "selection", "drift_detector", "phase1_cycles", "recalibration_window",
                    "n_cycles", "n_repetitions", "seeds", "output_dir", "mode", "experiment",
                    "schema_dir"},
                   "configuration");
    cfg.initial_x = cfg.plant_bounds.lo;
    if (j.contains("simulator")) parse_simulator(j["simulator"], cfg);
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      if (!w.is_array() || w.size() != 3) throw ConfigError("weights must list three values");
      for (std::size_t k = 0; k < 3; ++k) cfg.weights[k] = w[k].get<double>();
    }
    cfg.goal = j.value("goal", cfg.goal);
    if (j.contains("design")) {
      const auto& d = j["design"];
      reject_unknown(d, {"kind", "n_initial"}, "design");
      if (d.contains("kind")) cfg.design.kind = smbo::parse_design_kind(d["kind"].get<std::string>());
      cfg.design.n_initial = d.value("n_initial", cfg.design.n_initial);
    }
    if (j.contains("knowledge") && j.contains("knowledge_file"))
      throw ConfigError("give either knowledge or knowledge_file, not both");
    if (j.contains("knowledge")) cfg.knowledge = conceptual::parse_knowledge_base(j["knowledge"].dump());
    if (j.contains("knowledge_file")) {
      std::filesystem::path p = j["knowledge_file"].get<std::string>();
      cfg.knowledge = conceptual::load_knowledge_base(p.is_absolute() ? p : base_dir / p);
    }
    if (j.contains("selection")) cfg.cognition.policy.alpha = j["selection"].value("alpha", 0.5);
    if (j.contains("drift_detector")) {
      const auto& d = j["drift_detector"];
      reject_unknown(d, {"window", "ratio"}, "drift_detector");
      cfg.cognition.drift.window = d.value("window", cfg.cognition.drift.window);
      cfg.cognition.drift.ratio = d.value("ratio", cfg.cognition.drift.ratio);
    }
    cfg.cognition.phase1_cycles = j.value("phase1_cycles", cfg.cognition.phase1_cycles);
    if (j.contains("recalibration_window") && !j["recalibration_window"].is_null())
      cfg.cognition.recalibration_window = j["recalibration_window"].get<std::size_t>();
    cfg.n_cycles = j.value("n_cycles", cfg.n_cycles);
    cfg.n_repetitions = j.value("n_repetitions", cfg.n_repetitions);
    if (j.contains("seeds")) {
      for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
    } else {
      for (int r = 0; r < cfg.n_repetitions; ++r) cfg.seeds.push_back(static_cast<std::uint64_t>(r + 1));
    }
    if (j.contains("output_dir")) {
      std::filesystem::path p = j["output_dir"].get<std::string>();
      cfg.output_dir = p.is_absolute() ? p : base_dir / p;
    }
    if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("experiment")) cfg.experiment = parse_experiment(j["experiment"].get<std::string>());
    if (j.contains("schema_dir")) {
      std::filesystem::path p = j["schema_dir"].get<std::string>();
      cfg.schema_dir = p.is_absolute() ? p : base_dir / p;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  } catch (const conceptual::KnowledgeError& e) {
    throw ConfigError(e.what());
  } catch (const smbo::SmboError& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace caai::workflow
