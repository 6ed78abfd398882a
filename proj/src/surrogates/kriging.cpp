#include "caai/surrogates/kriging.hpp"

#include "caai/surrogates/byte_io.hpp"
#include "caai/surrogates/cpu_timer.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace caai::surrogates {

namespace {

Eigen::MatrixXd correlation(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < X.cols(); ++k) {
        const double d = X(i, k) - X(j, k);
        s += theta(k) * d * d;
      }
      C(i, j) = C(j, i) = std::exp(-s);
    }
  }
  return C;
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget = 0.0;
};

std::optional<Factorization> factorize(const Eigen::MatrixXd& C, const KrigingOptions& opts) {
  for (double nugget = opts.nugget_min; nugget <= opts.nugget_max * (1.0 + 1e-9);
       nugget *= 10.0) {
    Eigen::MatrixXd R = C;
    R.diagonal().array() += nugget;
    Factorization f{Eigen::LLT<Eigen::MatrixXd>(R), nugget};
    if (f.llt.info() == Eigen::Success) return f;
  }
  return std::nullopt;
}

struct GlsEstimate {
  double mu;
  double sigma2;
  double log_likelihood;
  Eigen::VectorXd alpha;
};

GlsEstimate estimate(const Factorization& f, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd r_ones = f.llt.solve(ones);
  const Eigen::VectorXd r_y = f.llt.solve(y);
  GlsEstimate e;
  e.mu = ones.dot(r_y) / ones.dot(r_ones);
  const Eigen::VectorXd resid = y - e.mu * ones;
  e.alpha = f.llt.solve(resid);
  e.sigma2 = std::max(resid.dot(e.alpha) / static_cast<double>(n), 0.0);
  const Eigen::MatrixXd& L = f.llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(L(i, i));
  const double s2 = std::max(e.sigma2, std::numeric_limits<double>::min());
  e.log_likelihood = -0.5 * static_cast<double>(n) * std::log(s2) - 0.5 * log_det;
  return e;
}

void check_design(const Dataset& data) {
  data.validate();
  if (data.size() < 2) throw SurrogateError("kriging needs at least 2 points");
  bool all_same = true;
  for (Eigen::Index i = 1; i < data.X.rows() && all_same; ++i)
    all_same = data.X.row(i) == data.X.row(0);
  if (all_same) throw SurrogateError("singular design: all inputs identical");
}

}  // namespace

struct KrigingBuilder {
  static KrigingModel build(const Dataset& data, const Eigen::VectorXd& theta,
                            const KrigingOptions& opts) {
    auto f = factorize(correlation(data.X, theta), opts);
    if (!f) throw SurrogateError("correlation matrix not factorizable at any nugget");
    GlsEstimate e = estimate(*f, data.y);
    KrigingModel m;
    m.X_ = data.X;
    m.y_ = data.y;
    m.theta_ = theta;
    m.nugget_ = f->nugget;
    m.mu_ = e.mu;
    m.sigma2_ = e.sigma2;
    m.log_likelihood_ = e.log_likelihood;
    m.chol_ = f->llt.matrixL();
    m.alpha_ = std::move(e.alpha);
    return m;
  }
};

std::optional<LikelihoodPoint> kriging_log_likelihood(const Dataset& data,
                                                      const Eigen::VectorXd& theta,
                                                      const KrigingOptions& opts) {
  auto f = factorize(correlation(data.X, theta), opts);
  if (!f) return std::nullopt;
  return LikelihoodPoint{estimate(*f, data.y).log_likelihood, f->nugget};
}

std::pair<KrigingModel, FitReport> kriging_fit(const Dataset& data, const KrigingOptions& opts) {
  check_design(data);
  if (opts.theta_grid < 2 || !(opts.log10_theta_lo < opts.log10_theta_hi))
    throw SurrogateError("invalid theta search range");
  ThreadCpuTimer timer;
  const Eigen::Index d = static_cast<Eigen::Index>(data.dims());

  auto score = [&](const Eigen::VectorXd& log_theta) {
    Eigen::VectorXd theta = log_theta.unaryExpr([](double v) { return std::pow(10.0, v); });
    auto ll = kriging_log_likelihood(data, theta, opts);
    return ll ? ll->log_likelihood : -std::numeric_limits<double>::infinity();
  };

  // Isotropic log grid, then per-dimension pattern search.
  const double spacing =
      (opts.log10_theta_hi - opts.log10_theta_lo) / static_cast<double>(opts.theta_grid - 1);
  Eigen::VectorXd best(d);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < opts.theta_grid; ++g) {
    Eigen::VectorXd cand = Eigen::VectorXd::Constant(d, opts.log10_theta_lo + spacing * g);
    const double ll = score(cand);
    if (ll > best_ll || g == 0) {
      best_ll = ll;
      best = cand;
    }
  }
  if (!std::isfinite(best_ll))
    throw SurrogateError("correlation matrix not factorizable at any nugget");

  double step = spacing;
  for (int it = 0; it < opts.refine_steps; ++it) {
    Eigen::VectorXd move = best;
    double move_ll = best_ll;
    for (Eigen::Index k = 0; k < d; ++k) {
      for (double dir : {-1.0, 1.0}) {
        Eigen::VectorXd cand = best;
        cand(k) = std::clamp(cand(k) + dir * step, opts.log10_theta_lo, opts.log10_theta_hi);
        if (cand(k) == best(k)) continue;
        const double ll = score(cand);
        if (ll > move_ll) {
          move_ll = ll;
          move = cand;
        }
      }
    }
    if (move_ll > best_ll) {
      best = move;
      best_ll = move_ll;
    } else {
      step *= 0.5;
    }
  }

  Eigen::VectorXd theta = best.unaryExpr([](double v) { return std::pow(10.0, v); });
  KrigingModel model = KrigingBuilder::build(data, theta, opts);
  FitReport report;
  report.cpu_seconds = timer.elapsed_seconds();
  report.n_points = data.size();
  report.model_bytes = model.serialize().size();
  return {std::move(model), report};
}

Prediction KrigingModel::predict(std::span<const double> x) const {
  if (x.size() != dims()) throw SurrogateError("query dimension mismatch");
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    bool same = true;
    for (Eigen::Index k = 0; k < X_.cols(); ++k) {
      const double d = x[static_cast<std::size_t>(k)] - X_(i, k);
      s += theta_(k) * d * d;
      same = same && d == 0.0;
    }
    // The nugget belongs to the correlation at zero distance, so a query on a
    // training input reproduces its observation.
    c(i) = std::exp(-s) + (same ? nugget_ : 0.0);
  }
  Prediction p;
  p.mean = mu_ + c.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(c);
  const double var = sigma2_ * (1.0 - v.squaredNorm());
  p.sd = std::sqrt(std::max(var, 0.0));
  return p;
}

std::vector<std::uint8_t> KrigingModel::serialize() const {
  detail::ByteWriter w;
  w.put_tag("KRG1");
  const auto n = static_cast<std::uint32_t>(X_.rows());
  const auto d = static_cast<std::uint32_t>(X_.cols());
  w.put(n);
  w.put(d);
  for (std::uint32_t k = 0; k < d; ++k) w.put(theta_(k));
  w.put(nugget_);
  w.put(mu_);
  w.put(sigma2_);
  w.put(log_likelihood_);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < d; ++k) w.put(X_(i, k));
    w.put(y_(i));
    w.put(alpha_(i));
  }
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j <= i; ++j) w.put(chol_(i, j));
  return w.take();
}

KrigingModel KrigingModel::deserialize(const std::vector<std::uint8_t>& blob) {
  detail::ByteReader r(blob);
  r.expect_tag("KRG1");
  const auto n = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  KrigingModel m;
  m.theta_.resize(d);
  for (std::uint32_t k = 0; k < d; ++k) m.theta_(k) = r.get<double>();
  m.nugget_ = r.get<double>();
  m.mu_ = r.get<double>();
  m.sigma2_ = r.get<double>();
  m.log_likelihood_ = r.get<double>();
  m.X_.resize(n, d);
  m.y_.resize(n);
  m.alpha_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < d; ++k) m.X_(i, k) = r.get<double>();
    m.y_(i) = r.get<double>();
    m.alpha_(i) = r.get<double>();
  }
  m.chol_ = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j <= i; ++j) m.chol_(i, j) = r.get<double>();
  if (!r.done()) throw SurrogateError("trailing bytes in kriging blob");
  return m;
}

}  // namespace caai::surrogates
