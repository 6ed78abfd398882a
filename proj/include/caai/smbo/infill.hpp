#pragma once

#include "caai/surrogates/surrogate.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace caai::smbo {

enum class InfillCriterion { predicted_mean, expected_improvement };

InfillCriterion parse_infill_criterion(std::string_view s);
std::string_view to_string(InfillCriterion c);

/// Multi-start pattern search settings. Steps and tolerance are fractions of
/// the unit range.
struct InfillSpec {
  InfillCriterion criterion = InfillCriterion::predicted_mean;
  int n_starts = 10;
  int max_iter = 100;
  double initial_step = 0.1;
  double shrink = 0.5;
  double tolerance = 1e-4;

  void validate() const;
};

/// Expected improvement for minimization:
///   EI = (best - mean) Phi(z) + sd phi(z),  z = (best - mean) / sd,
/// and max(best - mean, 0) when sd == 0.
double expected_improvement(double mean, double sd, double best_y);

struct InfillResult {
  std::vector<double> x;  // unit cube
  double predicted = 0.0;  // model mean at x
};

/// Searches the model over the unit cube. Starts are stratified uniform
/// (one per stratum, Latin hypercube in several dimensions); each start
/// descends by compass moves, shrinking the step when no move improves.
InfillResult optimize_infill(const surrogates::Surrogate& model, const InfillSpec& spec,
                             double best_y, std::uint64_t seed);

}  // namespace caai::smbo
