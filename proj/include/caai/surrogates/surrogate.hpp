#pragma once

#include "caai/surrogates/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace caai::surrogates {

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;  // predictive standard deviation or ensemble spread
};

struct FitReport {
  double cpu_seconds = 0.0;
  std::size_t model_bytes = 0;
  std::size_t n_points = 0;
};

/// Common read-only interface of a fitted model over the unit cube.
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual Prediction predict(std::span<const double> x) const = 0;
  Prediction predict(double x) const { return predict(std::span<const double>(&x, 1)); }

  virtual std::size_t dims() const = 0;
  virtual std::vector<std::uint8_t> serialize() const = 0;
  virtual std::string_view algorithm() const = 0;
};

}  // namespace caai::surrogates
