#pragma once

#include "caai/surrogates/surrogate.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace caai::surrogates {

struct ForestOptions {
  int n_trees = 100;
  int min_leaf = 2;
  std::uint64_t seed = 1;
};

/// Regression tree stored as a flat node array; node 0 is the root.
struct RegressionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    double value = 0.0;         // leaf mean
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
};

/// Bagged regression trees. Spread is the standard deviation of the
/// per-tree predictions.
class ForestModel final : public Surrogate {
 public:
  Prediction predict(std::span<const double> x) const override;
  using Surrogate::predict;

  std::size_t dims() const override { return dims_; }
  std::vector<std::uint8_t> serialize() const override;
  std::string_view algorithm() const override { return "random-forest"; }

  static ForestModel deserialize(const std::vector<std::uint8_t>& blob);

  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  friend std::pair<ForestModel, FitReport> rf_fit(const Dataset&, const ForestOptions&);

  std::size_t dims_ = 0;
  std::vector<RegressionTree> trees_;
};

/// Grows one tree on the given rows (no resampling). Splits maximize the
/// reduction in squared error over midpoints of sorted unique values; a node
/// becomes a leaf when it cannot give both children min_leaf rows or has
/// zero variance.
RegressionTree grow_tree(const Dataset& data, std::vector<std::size_t> rows, int min_leaf,
                         std::uint64_t feature_seed);

std::pair<ForestModel, FitReport> rf_fit(const Dataset& data, const ForestOptions& opts = {});

}  // namespace caai::surrogates
