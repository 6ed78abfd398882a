#include "caai/surrogates/dataset.hpp"

#include <string>

namespace caai::surrogates {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd targets, std::optional<std::size_t> win)
    : X(std::move(x)), y(std::move(targets)), window(win) {
  validate();
}

Dataset Dataset::from_1d(std::span<const double> x, std::span<const double> y,
                         std::optional<std::size_t> win) {
  if (x.size() != y.size()) throw SurrogateError("x and y differ in length");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 1);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = x[i];
    Y(static_cast<Eigen::Index>(i)) = y[i];
  }
  return Dataset(std::move(X), std::move(Y), win);
}

void Dataset::add(std::span<const double> x, double target) {
  if (size() > 0 && x.size() != dims())
    throw SurrogateError("point dimension does not match dataset");
  for (double v : x)
    if (!(v >= 0.0 && v <= 1.0)) throw SurrogateError("input outside the unit cube");
  const Eigen::Index n = y.size();
  const Eigen::Index d = static_cast<Eigen::Index>(x.size());
  X.conservativeResize(n + 1, d);
  y.conservativeResize(n + 1);
  for (Eigen::Index k = 0; k < d; ++k) X(n, k) = x[static_cast<std::size_t>(k)];
  y(n) = target;
}

void Dataset::validate() const {
  if (X.rows() != y.size()) throw SurrogateError("row count differs from target count");
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index k = 0; k < X.cols(); ++k)
      if (!(X(i, k) >= 0.0 && X(i, k) <= 1.0))
        throw SurrogateError("input outside the unit cube at row " + std::to_string(i));
  if (window && *window == 0) throw SurrogateError("window must be positive");
}

Dataset apply_forgetting(const Dataset& data) {
  if (!data.window || data.size() <= *data.window) return data;
  const auto keep = static_cast<Eigen::Index>(*data.window);
  const Eigen::Index start = data.X.rows() - keep;
  Dataset out;
  out.X = data.X.bottomRows(keep);
  out.y = data.y.segment(start, keep);
  out.window = data.window;
  return out;
}

}  // namespace caai::surrogates
