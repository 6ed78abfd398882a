#include "caai/smbo/design.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace caai::smbo {

double Interval::to_unit(double x) const { return (x - lo) / (hi - lo); }

double Interval::from_unit(double t) const {
  return std::clamp(lo + std::clamp(t, 0.0, 1.0) * (hi - lo), lo, hi);
}

DesignKind parse_design_kind(std::string_view s) {
  if (s == "equidistant") return DesignKind::equidistant;
  if (s == "latin-hypercube" || s == "lhs") return DesignKind::latin_hypercube;
  throw SmboError("unknown design kind '" + std::string(s) + "'");
}

std::vector<std::vector<double>> generate_design(const DesignSpec& spec,
                                                 std::span<const Interval> bounds) {
  if (spec.n_initial < 2) throw SmboError("initial design needs at least 2 points");
  if (bounds.empty()) throw SmboError("design needs at least one dimension");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi)) throw SmboError("design bounds need lo < hi");
  const auto n = static_cast<std::size_t>(spec.n_initial);
  std::vector<std::vector<double>> points(n, std::vector<double>(bounds.size()));

  if (spec.kind == DesignKind::equidistant) {
    if (bounds.size() != 1) throw SmboError("equidistant design is one-dimensional only");
    const Interval b = bounds[0];
    for (std::size_t i = 0; i < n; ++i)
      points[i][0] = i + 1 == n ? b.hi : b.lo + static_cast<double>(i) * b.width() / (n - 1.0);
    return points;
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    std::vector<std::size_t> strata(n);
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (static_cast<double>(strata[i]) + unit(rng)) / static_cast<double>(n);
      points[i][k] = bounds[k].from_unit(t);
    }
  }
  return points;
}

std::vector<double> generate_design(const DesignSpec& spec, Interval bounds) {
  auto rows = generate_design(spec, std::span<const Interval>(&bounds, 1));
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[0]);
  return out;
}

}  // namespace caai::smbo
