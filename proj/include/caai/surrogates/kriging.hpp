#pragma once

#include "caai/surrogates/surrogate.hpp"

#include <Eigen/Core>

#include <optional>
#include <utility>

namespace caai::surrogates {

struct KrigingOptions {
  double log10_theta_lo = -3.0;
  double log10_theta_hi = 3.0;
  int theta_grid = 25;
  int refine_steps = 20;
  /// Nugget escalation runs in decades from nugget_min up to nugget_max.
  double nugget_min = 1e-10;
  double nugget_max = 1e-2;
};

/// Ordinary Kriging with a Gaussian correlation
///   R_ij = exp(-sum_k theta_k (x_ik - x_jk)^2) + nugget * [i == j].
/// A query located exactly on a training input includes the nugget in its
/// correlation, which makes the predictor an exact interpolator of the data.
/// Stores the Cholesky factor of R, so its size grows with n^2.
class KrigingModel final : public Surrogate {
 public:
  Prediction predict(std::span<const double> x) const override;
  using Surrogate::predict;

  std::size_t dims() const override { return static_cast<std::size_t>(X_.cols()); }
  std::vector<std::uint8_t> serialize() const override;
  std::string_view algorithm() const override { return "kriging"; }

  static KrigingModel deserialize(const std::vector<std::uint8_t>& blob);

  const Eigen::VectorXd& theta() const { return theta_; }
  double nugget() const { return nugget_; }
  double mu() const { return mu_; }
  double sigma2() const { return sigma2_; }
  double log_likelihood() const { return log_likelihood_; }

 private:
  friend struct KrigingBuilder;

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd theta_;
  double nugget_ = 0.0;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double log_likelihood_ = 0.0;
  Eigen::MatrixXd chol_;   // lower factor L with R = L L^T
  Eigen::VectorXd alpha_;  // R^{-1} (y - mu)
};

/// Concentrated log-likelihood at one theta, after nugget escalation.
struct LikelihoodPoint {
  double log_likelihood;
  double nugget;
};

/// Evaluates the concentrated log-likelihood
///   -n/2 log(sigma2_hat) - 1/2 log det R
/// raising the nugget until R factorizes. Returns nullopt if no nugget works.
std::optional<LikelihoodPoint> kriging_log_likelihood(const Dataset& data,
                                                      const Eigen::VectorXd& theta,
                                                      const KrigingOptions& opts);

/// Maximum-likelihood theta by log-grid search plus pattern-search refinement.
/// Throws SurrogateError for n < 2, identical inputs, or unfactorizable R.
std::pair<KrigingModel, FitReport> kriging_fit(const Dataset& data,
                                               const KrigingOptions& opts = {});

}  // namespace caai::surrogates
