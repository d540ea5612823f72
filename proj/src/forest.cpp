#include "labelguard/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "labelguard/random.hpp"

namespace labelguard {

namespace {

constexpr double kMinGain = 1e-12;

struct Builder {
  const MatrixXd& x;
  const VectorXd& y;
  const ForestConfig& cfg;
  Index mtry;
  Rng& rng;
  VectorXd& importance;
  RegressionTree tree;

  static double sse(double sum, double sum_sq, double count) {
    return count > 0 ? sum_sq - sum * sum / count : 0.0;
  }

  int grow(std::vector<Index>& rows, int depth) {
    double sum = 0.0, sum_sq = 0.0;
    for (Index r : rows) {
      sum += y(r);
      sum_sq += y(r) * y(r);
    }
    const auto count = static_cast<double>(rows.size());
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, sum / count, -1, -1});
    if (depth >= cfg.max_depth || rows.size() < 2) return id;
    const double parent = sse(sum, sum_sq, count);
    if (parent <= kMinGain) return id;

    // Partial Fisher-Yates draw of mtry candidate features.
    std::vector<Index> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), Index{0});
    for (Index i = 0; i < mtry; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     rng.below(static_cast<std::uint64_t>(x.cols() - i));
      std::swap(features[static_cast<std::size_t>(i)], features[j]);
    }
    features.resize(static_cast<std::size_t>(mtry));
    std::sort(features.begin(), features.end());

    Index best = -1;
    double best_gain = kMinGain;
    for (Index f : features) {
      double s1 = 0.0, q1 = 0.0, c1 = 0.0;
      for (Index r : rows) {
        if (x(r, f) == 1.0) {
          s1 += y(r);
          q1 += y(r) * y(r);
          c1 += 1.0;
        }
      }
      if (c1 == 0.0 || c1 == count) continue;
      const double gain =
          parent - sse(s1, q1, c1) - sse(sum - s1, sum_sq - q1, count - c1);
      if (gain > best_gain) {
        best_gain = gain;
        best = f;
      }
    }
    if (best < 0) return id;

    importance(best) += best_gain;
    std::vector<Index> left, right;
    for (Index r : rows) (x(r, best) == 1.0 ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best;
    node.left = l;
    node.right = rgt;
    return id;
  }
};

}  // namespace

int RegressionTree::leaf(const Eigen::Ref<const VectorXd>& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(at)];
    at = x(node.feature) == 1.0 ? node.right : node.left;
  }
  return at;
}

double ForestRegressor::predict(const Eigen::Ref<const VectorXd>& x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
}

ForestRegressor fit_forest(const MatrixXd& x, const VectorXd& y, const ForestConfig& cfg) {
  if (cfg.n_trees < 1 || cfg.max_depth < 0) {
    throw ConfigError("forest needs n_trees >= 1 and max_depth >= 0");
  }
  if (x.rows() != y.size()) throw DimensionError("forest: rows and targets differ");
  if (x.rows() < 2) throw ConfigError("forest needs at least 2 samples");
  const Index n = x.rows();
  const Index mtry = std::max<Index>(
      1, static_cast<Index>(std::floor(std::sqrt(static_cast<double>(x.cols())))));

  ForestRegressor forest;
  forest.importance = VectorXd::Zero(x.cols());
  Rng rng(cfg.seed);
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    std::sort(rows.begin(), rows.end());
    Builder b{x, y, cfg, mtry, rng, forest.importance, {}};
    b.grow(rows, 0);
    forest.trees.push_back(std::move(b.tree));
  }
  const double total = forest.importance.sum();
  if (total > 0.0) forest.importance /= total;
  return forest;
}

FeatureRanking rf_rank_features(const Dataset& train, const ForestConfig& cfg) {
  const ForestRegressor forest =
      fit_forest(train.features(), train.labels().cast<double>(), cfg);
  return make_ranking(forest.importance);
}

}  // namespace labelguard
