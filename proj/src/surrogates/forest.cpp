#include "caai/surrogates/forest.hpp"

#include "caai/surrogates/byte_io.hpp"
#include "caai/surrogates/cpu_timer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace caai::surrogates {

double RegressionTree::predict(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double child_sse = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const Dataset& data, int min_leaf, std::uint64_t seed)
      : data_(data), min_leaf_(static_cast<std::size_t>(std::max(min_leaf, 1))), rng_(seed) {}

  RegressionTree grow(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    build(std::move(rows));
    return std::move(tree_);
  }

 private:
  std::int32_t build(std::vector<std::size_t> rows) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    double sum = 0.0, sum_sq = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (auto r : rows) {
      const double v = data_.y(static_cast<Eigen::Index>(r));
      sum += v;
      sum_sq += v * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double n = static_cast<double>(rows.size());
    const double sse = std::max(sum_sq - sum * sum / n, 0.0);
    tree_.nodes[static_cast<std::size_t>(id)].value = std::clamp(sum / n, lo, hi);

    if (lo == hi || rows.size() < 2 * min_leaf_) return id;

    auto split = best_split(rows);
    if (split.feature < 0 || !(split.child_sse < sse)) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows)
      (data_.X(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right)
          .push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const std::int32_t l = build(std::move(left));
    const std::int32_t r = build(std::move(right));
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(std::vector<std::size_t>& rows) {
    // One candidate feature per split.
    std::int32_t feature = 0;
    if (data_.dims() > 1) {
      std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(data_.dims()) - 1);
      feature = pick(rng_);
    }
    auto xval = [&](std::size_t r) { return data_.X(static_cast<Eigen::Index>(r), feature); };
    auto yval = [&](std::size_t r) { return data_.y(static_cast<Eigen::Index>(r)); };
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return xval(a) < xval(b); });

    const std::size_t n = rows.size();
    double total = 0.0, total_sq = 0.0;
    for (auto r : rows) {
      total += yval(r);
      total_sq += yval(r) * yval(r);
    }
    Split best;
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += yval(rows[i]);
      left_sq += yval(rows[i]) * yval(rows[i]);
      const double a = xval(rows[i]), b = xval(rows[i + 1]);
      if (a == b) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < min_leaf_ || nr < min_leaf_) continue;
      const double right_sum = total - left_sum, right_sq = total_sq - left_sq;
      const double sse = std::max(left_sq - left_sum * left_sum / static_cast<double>(nl), 0.0) +
                         std::max(right_sq - right_sum * right_sum / static_cast<double>(nr), 0.0);
      if (best.feature < 0 || sse < best.child_sse) {
        best.feature = feature;
        best.threshold = 0.5 * (a + b);
        best.child_sse = sse;
      }
    }
    return best;
  }

  const Dataset& data_;
  std::size_t min_leaf_;
  std::mt19937_64 rng_;
  RegressionTree tree_;
};

}  // namespace

RegressionTree grow_tree(const Dataset& data, std::vector<std::size_t> rows, int min_leaf,
                         std::uint64_t feature_seed) {
  if (rows.empty()) throw SurrogateError("cannot grow a tree on zero rows");
  return TreeGrower(data, min_leaf, feature_seed).grow(std::move(rows));
}

std::pair<ForestModel, FitReport> rf_fit(const Dataset& data, const ForestOptions& opts) {
  data.validate();
  if (data.size() < 2) throw SurrogateError("random forest needs at least 2 points");
  if (opts.n_trees < 1 || opts.min_leaf < 1) throw SurrogateError("invalid forest options");
  ThreadCpuTimer timer;

  ForestModel model;
  model.dims_ = data.dims();
  model.trees_.reserve(static_cast<std::size_t>(opts.n_trees));
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> draw(0, data.size() - 1);
  for (int t = 0; t < opts.n_trees; ++t) {
    std::vector<std::size_t> rows(data.size());
    for (auto& r : rows) r = draw(rng);
    std::sort(rows.begin(), rows.end());
    model.trees_.push_back(grow_tree(data, std::move(rows), opts.min_leaf, rng()));
  }

  FitReport report;
  report.cpu_seconds = timer.elapsed_seconds();
  report.n_points = data.size();
  report.model_bytes = model.serialize().size();
  return {std::move(model), report};
}

Prediction ForestModel::predict(std::span<const double> x) const {
  if (x.size() != dims_) throw SurrogateError("query dimension mismatch");
  double sum = 0.0, sum_sq = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& t : trees_) {
    const double v = t.predict(x);
    sum += v;
    sum_sq += v * v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double n = static_cast<double>(trees_.size());
  Prediction p;
  // Rounding may push the average of equal values outside their range.
  p.mean = std::clamp(sum / n, lo, hi);
  p.sd = lo == hi ? 0.0 : std::sqrt(std::max(sum_sq / n - p.mean * p.mean, 0.0));
  return p;
}

std::vector<std::uint8_t> ForestModel::serialize() const {
  detail::ByteWriter w;
  w.put_tag("RFR1");
  w.put(static_cast<std::uint32_t>(dims_));
  w.put(static_cast<std::uint32_t>(trees_.size()));
  for (const auto& t : trees_) {
    w.put(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.put(n.feature);
      w.put(n.threshold);
      w.put(n.value);
      w.put(n.left);
      w.put(n.right);
    }
  }
  return w.take();
}

ForestModel ForestModel::deserialize(const std::vector<std::uint8_t>& blob) {
  detail::ByteReader r(blob);
  r.expect_tag("RFR1");
  ForestModel m;
  m.dims_ = r.get<std::uint32_t>();
  const auto n_trees = r.get<std::uint32_t>();
  m.trees_.resize(n_trees);
  for (auto& t : m.trees_) {
    t.nodes.resize(r.get<std::uint32_t>());
    for (auto& n : t.nodes) {
      n.feature = r.get<std::int32_t>();
      n.threshold = r.get<double>();
      n.value = r.get<double>();
      n.left = r.get<std::int32_t>();
      n.right = r.get<std::int32_t>();
    }
  }
  if (!r.done()) throw SurrogateError("trailing bytes in forest blob");
  return m;
}

}  // namespace caai::surrogates
