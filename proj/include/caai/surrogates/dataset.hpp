#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace caai::surrogates {

class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training data with inputs scaled to the unit cube. Rows are kept in
/// arrival order; the oldest row is row 0.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<std::size_t> window;

  Dataset() = default;
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd targets,
          std::optional<std::size_t> win = std::nullopt);

  /// One-dimensional convenience constructor.
  static Dataset from_1d(std::span<const double> x, std::span<const double> y,
                         std::optional<std::size_t> win = std::nullopt);

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  std::size_t dims() const { return static_cast<std::size_t>(X.cols()); }

  void add(std::span<const double> x, double target);
  void add(double x, double target) { add(std::span<const double>(&x, 1), target); }

  /// Throws unless rows match targets and every input lies in [0, 1].
  void validate() const;
};

/// Sliding-window forgetting: keeps the newest `window` rows.
Dataset apply_forgetting(const Dataset& data);

}  // namespace caai::surrogates
