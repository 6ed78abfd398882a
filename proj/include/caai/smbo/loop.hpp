#pragma once

#include "caai/smbo/design.hpp"
#include "caai/smbo/infill.hpp"
#include "caai/surrogates/model_setup.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace caai::smbo {

/// Observed objective for a point in raw units (one plant batch).
using Evaluator = std::function<double(std::span<const double> x)>;
/// Noise-free objective for a point in raw units; used for prediction error.
using TruthOracle = std::function<double(std::span<const double> x)>;

/// Evaluated history with inputs mapped to the unit cube.
struct SmboState {
  std::vector<Interval> bounds;
  surrogates::Dataset history;
  std::vector<double> best_x;
  double best_y = std::numeric_limits<double>::infinity();
  int cycle = 0;  // evaluations so far

  /// Appends one evaluation and updates the running best.
  void record(std::span<const double> x_raw, double y);
};

/// Evaluates the initial design. `window` enables sliding-window forgetting
/// for every later fit.
SmboState initialize(const DesignSpec& design, std::vector<Interval> bounds,
                     const Evaluator& evaluate,
                     std::optional<std::size_t> window = std::nullopt);

struct Proposal {
  std::vector<double> x;       // raw units
  std::vector<double> x_unit;  // unit cube
  double predicted = 0.0;
  surrogates::FitReport fit;
  std::shared_ptr<const surrogates::Surrogate> model;
};

/// Forgetting, fit, and infill search on the given history.
Proposal propose(const SmboState& state, const surrogates::ModelSetup& setup,
                 const InfillSpec& infill, std::uint64_t seed);

/// Per-cycle measurements of one pipeline.
struct StepRecord {
  int cycle = 0;  // evaluation count the model was fitted on
  std::vector<double> x_candidate;
  double predicted_optimum = 0.0;
  double prediction_error = 0.0;
  double y_observed = 0.0;
  double cpu_seconds = 0.0;
  std::size_t model_bytes = 0;
  std::size_t n_points = 0;
};

/// One evaluate-model-optimize cycle: propose, evaluate the candidate,
/// append it, and report |predicted - truth| at the candidate. An evaluator
/// exception propagates and leaves the state unchanged.
StepRecord smbo_step(SmboState& state, const surrogates::ModelSetup& setup,
                     const InfillSpec& infill, const Evaluator& evaluate,
                     const TruthOracle& truth, std::uint64_t seed);

}  // namespace caai::smbo
