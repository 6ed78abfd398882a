#pragma once

#include "caai/bus/broker.hpp"
#include "caai/conceptual/experience.hpp"
#include "caai/conceptual/report.hpp"
#include "caai/workflow/config.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace caai::workflow {

class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RepetitionResult {
  conceptual::ReportLog report;
  std::vector<bus::TopicStats> bus_stats;
  std::vector<conceptual::ExperienceEntry> experience;
  std::vector<int> drift_cycles;
  std::vector<int> recalibration_cycles;
  std::vector<std::string> report_texts;
  /// Adaption commands the plant refused on its own bounds check.
  int rejected_adaptions = 0;
  /// Issued commands whose value lay outside the knowledge-base bounds.
  int commands_outside_bounds = 0;
  int commands_sent = 0;
  /// Issued commands whose predicted gain fell short of the minimum.
  int commands_below_threshold = 0;
};

struct RunOptions {
  Mode mode = Mode::deterministic;
  std::uint64_t seed_offset = 0;
  /// Concurrent mode gives up when a cycle does not complete in time.
  std::chrono::milliseconds cycle_timeout{120000};
};

/// Seed of repetition `rep` after the offset is applied.
std::uint64_t repetition_seed(const ExperimentConfig& cfg, int rep, std::uint64_t offset);

/// One repetition of the configured experiment on a fresh bus and plant.
///
/// Deterministic mode steps the tasks in the fixed order preprocessor,
/// pipelines (knowledge-base order), cognition, business logic, adaption,
/// report, round after round, until none has work left. Concurrent mode
/// runs every task on its own thread. In both, the plant runs batch c + 1
/// only after the adaption acknowledgement of cycle c.
RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep, const RunOptions& opts = {});

struct RunSummary {
  std::vector<std::filesystem::path> files;
  std::vector<RepetitionResult> repetitions;
};

/// Runs every repetition and writes rep_XX.csv, aggregate.csv and
/// bus_stats.csv into `out_dir`, appending to experience.jsonl. Files of
/// this run are removed again if any repetition fails.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                          const RunOptions& opts = {});

class AggregateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kAggregateHeader = "cycle,pipeline_id,y,pred_error,cpu_ms,model_bytes";

/// Per (cycle, pipeline) medians of y, pred_error, cpu_ms and model_bytes
/// over report CSV texts. Rows without model fields are skipped.
std::string aggregate_csv(const std::vector<std::string>& reports);
std::string aggregate_files(const std::vector<std::filesystem::path>& files);

}  // namespace caai::workflow
