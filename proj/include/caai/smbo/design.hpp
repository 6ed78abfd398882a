#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace caai::smbo {

class SmboError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double to_unit(double x) const;
  /// Maps [0, 1] back into the interval, clamped to its ends.
  double from_unit(double t) const;
};

enum class DesignKind { equidistant, latin_hypercube };

DesignKind parse_design_kind(std::string_view s);

struct DesignSpec {
  DesignKind kind = DesignKind::equidistant;
  int n_initial = 5;
  std::uint64_t seed = 1;
};

/// Initial design points, one row per point, in the units of `bounds`.
std::vector<std::vector<double>> generate_design(const DesignSpec& spec,
                                                 std::span<const Interval> bounds);

/// One-dimensional convenience overload.
std::vector<double> generate_design(const DesignSpec& spec, Interval bounds);

}  // namespace caai::smbo
