#include "caai/smbo/loop.hpp"

#include <algorithm>
#include <cmath>

namespace caai::smbo {

void SmboState::record(std::span<const double> x_raw, double y) {
  if (x_raw.size() != bounds.size()) throw SmboError("point dimension does not match bounds");
  std::vector<double> unit(x_raw.size());
  for (std::size_t k = 0; k < x_raw.size(); ++k)
    unit[k] = std::clamp(bounds[k].to_unit(x_raw[k]), 0.0, 1.0);
  history.add(unit, y);
  if (y < best_y) {
    best_y = y;
    best_x.assign(x_raw.begin(), x_raw.end());
  }
  ++cycle;
}

SmboState initialize(const DesignSpec& design, std::vector<Interval> bounds,
                     const Evaluator& evaluate, std::optional<std::size_t> window) {
  SmboState state;
  state.bounds = std::move(bounds);
  state.history.window = window;
  for (const auto& x : generate_design(design, state.bounds)) state.record(x, evaluate(x));
  return state;
}

Proposal propose(const SmboState& state, const surrogates::ModelSetup& setup,
                 const InfillSpec& infill, std::uint64_t seed) {
  const surrogates::Dataset train = surrogates::apply_forgetting(state.history);
  auto fitted = surrogates::fit_surrogate(train, setup, seed);
  const double incumbent = train.y.minCoeff();
  auto found = optimize_infill(*fitted.model, infill, incumbent, seed ^ 0x5bd1e995ULL);
  Proposal p;
  p.x_unit = found.x;
  p.x.resize(found.x.size());
  for (std::size_t k = 0; k < found.x.size(); ++k) p.x[k] = state.bounds[k].from_unit(found.x[k]);
  p.predicted = found.predicted;
  p.fit = fitted.report;
  p.model = std::move(fitted.model);
  return p;
}

StepRecord smbo_step(SmboState& state, const surrogates::ModelSetup& setup,
                     const InfillSpec& infill, const Evaluator& evaluate,
                     const TruthOracle& truth, std::uint64_t seed) {
  Proposal p = propose(state, setup, infill, seed);
  StepRecord rec;
  rec.cycle = state.cycle;
  rec.x_candidate = p.x;
  rec.predicted_optimum = p.predicted;
  rec.prediction_error = std::abs(p.predicted - truth(p.x));
  rec.cpu_seconds = p.fit.cpu_seconds;
  rec.model_bytes = p.fit.model_bytes;
  rec.n_points = p.fit.n_points;
  rec.y_observed = evaluate(p.x);
  state.record(p.x, rec.y_observed);
  return rec;
}

}  // namespace caai::smbo
