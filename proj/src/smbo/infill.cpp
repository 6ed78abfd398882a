#include "caai/smbo/infill.hpp"

#include "caai/smbo/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace caai::smbo {

InfillCriterion parse_infill_criterion(std::string_view s) {
  if (s == "predicted-mean") return InfillCriterion::predicted_mean;
  if (s == "expected-improvement") return InfillCriterion::expected_improvement;
  throw SmboError("unknown infill criterion '" + std::string(s) + "'");
}

std::string_view to_string(InfillCriterion c) {
  return c == InfillCriterion::predicted_mean ? "predicted-mean" : "expected-improvement";
}

void InfillSpec::validate() const {
  if (n_starts < 1 || max_iter < 1) throw SmboError("infill needs n_starts, max_iter >= 1");
  if (!(initial_step > 0.0) || !(tolerance > 0.0)) throw SmboError("infill steps must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw SmboError("infill shrink must lie in (0, 1)");
}

double expected_improvement(double mean, double sd, double best_y) {
  const double gain = best_y - mean;
  if (!(sd > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(gain * cdf + sd * pdf, 0.0);
}

InfillResult optimize_infill(const surrogates::Surrogate& model, const InfillSpec& spec,
                             double best_y, std::uint64_t seed) {
  spec.validate();
  const std::size_t d = model.dims();
  auto objective = [&](const std::vector<double>& x) {
    const auto p = model.predict(x);
    return spec.criterion == InfillCriterion::predicted_mean
               ? p.mean
               : -expected_improvement(p.mean, p.sd, best_y);
  };

  std::vector<Interval> unit(d, Interval{0.0, 1.0});
  DesignSpec starts_spec{DesignKind::latin_hypercube, std::max(spec.n_starts, 2), seed};
  auto starts = generate_design(starts_spec, unit);
  starts.resize(static_cast<std::size_t>(spec.n_starts));

  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  for (auto x : starts) {
    double f = objective(x);
    double step = spec.initial_step;
    for (int it = 0; it < spec.max_iter && step >= spec.tolerance; ++it) {
      std::vector<double> move;
      double move_f = f;
      for (std::size_t k = 0; k < d; ++k) {
        for (double dir : {-1.0, 1.0}) {
          std::vector<double> cand = x;
          cand[k] = std::clamp(cand[k] + dir * step, 0.0, 1.0);
          if (cand[k] == x[k]) continue;
          const double cf = objective(cand);
          if (cf < move_f) {
            move_f = cf;
            move = std::move(cand);
          }
        }
      }
      if (!move.empty()) {
        x = std::move(move);
        f = move_f;
      } else {
        step *= spec.shrink;
      }
    }
    if (best_x.empty() || f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return InfillResult{best_x, model.predict(best_x).mean};
}

}  // namespace caai::smbo
