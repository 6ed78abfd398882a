#pragma once

#include "caai/conceptual/knowledge.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace caai::cognition {

class CognitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineSpec {
  std::string id;
  std::string goal;
  /// Objective normalization comes from the goal's weights; recorded here
  /// so a pipeline can be reproduced from its spec alone.
  std::string normalization = "grid-sweep";
  conceptual::AlgorithmSetup setup;
  std::string consumer_group;
  std::optional<std::size_t> forgetting_window;
};

/// One pipeline per (algorithm, setup) of the goal, each with its own
/// consumer group "pipeline-<id>". Throws CognitionError("unsupported goal")
/// if the knowledge base has nothing for the goal.
std::vector<PipelineSpec> init_candidates(const conceptual::Goal& goal,
                                          const conceptual::KnowledgeBase& kb);

struct PipelinePerformance {
  std::string pipeline_id;
  int cycle = 0;
  double prediction_error = 0.0;
  double predicted_optimum = 0.0;
  double cpu_seconds = 0.0;
  std::uint64_t model_bytes = 0;
};

struct SelectionPolicy {
  double alpha = 0.5;  // weight of prediction error vs. predicted optimum
  void validate() const;
};

struct RankedPipeline {
  std::string pipeline_id;
  double score = 0.0;
  double cpu_seconds = 0.0;
  std::uint64_t model_bytes = 0;
};

/// s = alpha * norm(error) + (1 - alpha) * norm(optimum), min-max normalized
/// over the records (0 when all equal). Ascending; ties go to lower cpu time,
/// then smaller model, then id. Records must share one cycle.
std::vector<RankedPipeline> score(const std::vector<PipelinePerformance>& perf,
                                  const SelectionPolicy& policy);

std::string select_pipeline(const std::vector<RankedPipeline>& ranking);

struct DriftConfig {
  std::size_t window = 5;
  double ratio = 2.0;
  void validate() const;
};

/// Baseline is the median error over the first `window` observations after
/// a reset; afterwards it stays fixed until the next reset.
class DriftDetector {
 public:
  explicit DriftDetector(DriftConfig cfg = {});

  void reset();
  void observe(double prediction_error);

  const DriftConfig& config() const { return cfg_; }
  std::optional<double> baseline() const { return baseline_; }
  const std::vector<double>& errors() const { return errors_; }

 private:
  DriftConfig cfg_;
  std::optional<double> baseline_;
  std::vector<double> errors_;
};

double median(std::vector<double> v);

/// Median of the last `window` errors exceeds ratio * baseline. False
/// before the baseline exists or with fewer than `window` errors.
bool detect_drift(const DriftDetector& detector, const std::vector<double>& recent_errors);

enum class Phase { initialization, operation };
std::string_view to_string(Phase p);

struct CognitionConfig {
  SelectionPolicy policy;
  DriftConfig drift;
  int phase1_cycles = 10;
  /// Sliding window switched on for every pipeline at re-calibration.
  std::optional<std::size_t> recalibration_window;
  /// Off for single-pipeline benchmark runs, which never re-calibrate.
  bool monitor_drift = true;
  void validate() const;
};

/// What the cognition decided after one cycle of performance records.
struct CycleDecision {
  int cycle = 0;
  Phase phase = Phase::initialization;  // phase the cycle was processed in
  std::string driver;                   // pipeline whose candidate is evaluated next
  std::optional<std::string> selected;  // set on the cycle a selection happens
  bool drift = false;
  bool recalibrated = false;
  double drift_median = 0.0;    // median of the last window of errors
  double drift_baseline = 0.0;
  std::vector<RankedPipeline> ranking;
};

/// Phase machine over pipeline performance. initialization collects
/// phase1_cycles of records, then selects on per-pipeline medians;
/// operation monitors the selected pipeline's error and re-enters
/// initialization on drift.
class Cognition {
 public:
  Cognition(std::vector<PipelineSpec> candidates, CognitionConfig cfg);

  /// Expects exactly one record per active candidate, all for `cycle`.
  CycleDecision on_cycle(int cycle, const std::vector<PipelinePerformance>& perf);

  /// Specs after re-calibration, forgetting windows applied.
  std::vector<PipelineSpec> recalibrate();

  Phase phase() const { return phase_; }
  const std::optional<std::string>& selected() const { return selected_; }
  int recalibrations() const { return recalibrations_; }
  const std::vector<PipelineSpec>& candidates() const { return candidates_; }
  const DriftDetector& detector() const { return detector_; }
  const std::vector<PipelinePerformance>& phase_history() const { return phase_history_; }

 private:
  std::vector<PipelineSpec> candidates_;
  CognitionConfig cfg_;
  Phase phase_ = Phase::initialization;
  int phase_cycles_ = 0;
  std::vector<PipelinePerformance> phase_history_;
  std::optional<std::string> selected_;
  DriftDetector detector_;
  int recalibrations_ = 0;
};

}  // namespace caai::cognition
