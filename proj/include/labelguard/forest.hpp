#pragma once

#include <cstdint>
#include <vector>

#include "labelguard/core.hpp"
#include "labelguard/dataset.hpp"

namespace labelguard {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  std::uint64_t seed = 0;
};

/// Regression tree over binary features: each split sends x[f] == 0 left
/// and x[f] == 1 right.
struct RegressionTree {
  struct Node {
    Index feature = -1;  // -1 for a leaf
    double value = 0.0;  // mean target of the node's samples
    int left = -1;
    int right = -1;
  };
  std::vector<Node> nodes;

  /// Index of the leaf reached by x.
  int leaf(const Eigen::Ref<const VectorXd>& x) const;
  double predict(const Eigen::Ref<const VectorXd>& x) const {
    return nodes[static_cast<std::size_t>(leaf(x))].value;
  }
};

struct ForestRegressor {
  std::vector<RegressionTree> trees;
  /// Summed variance (SSE) reduction per feature, normalised to sum to 1
  /// when any split exists, all zero otherwise.
  VectorXd importance;

  double predict(const Eigen::Ref<const VectorXd>& x) const;
};

/// Bagged regression trees with floor(sqrt(k)) candidate features per split.
ForestRegressor fit_forest(const MatrixXd& x, const VectorXd& y, const ForestConfig& cfg);

/// Ranks features by forest importance with the label as a real target.
/// Constant labels give all-zero importance and ascending-index order.
FeatureRanking rf_rank_features(const Dataset& train, const ForestConfig& cfg);

}  // namespace labelguard
