#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "labelguard/core.hpp"

namespace labelguard {

struct KMeansOptions {
  int n_clusters = 2;
  std::uint64_t seed = 0;
  int max_iter = 300;
  /// Stop once no centroid moves farther than this.
  double tol = 1e-8;
  /// k-means++ restarts; the lowest-inertia run is kept.
  int restarts = 10;
};

struct KMeansModel {
  MatrixXd centroids;  // n_clusters x k
  Labels assignment;   // nearest centroid per sample, ties to lower index
  double inertia = 0.0;
  /// Fewer non-empty clusters than requested (e.g. all points identical).
  bool degenerate = false;
  int iterations = 0;
  /// Inertia after each assignment step of the kept restart.
  std::vector<double> inertia_trace;

  /// Nearest centroid for each row of X.
  Labels predict(const MatrixXd& x) const;
  int nearest(const Eigen::Ref<const VectorXd>& point) const;
};

/// Lloyd iterations from k-means++ seeding. Deterministic given seed.
KMeansModel kmeans_fit(const MatrixXd& x, const KMeansOptions& options = {});

/// Euclidean distance between two rows, computed from differences so that
/// coincident points are exactly 0.
template <typename DerivedA, typename DerivedB>
auto euclidean(const Eigen::MatrixBase<DerivedA>& a,
               const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

/// Symmetric n x n matrix of pairwise Euclidean distances.
template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_distances(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  Matrix<Scalar> d = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = euclidean(x.row(i), x.row(j));
    }
  }
  return d;
}

/// Per-sample silhouette (b - a) / max(a, b) under Euclidean distance, where
/// a is the mean distance to the rest of the sample's cluster and b the
/// smallest mean distance to another cluster. Samples in singleton clusters,
/// and samples with a = b = 0, get 0. Cluster ids may be arbitrary integers.
/// Throws ConfigError when fewer than two clusters are present.
template <typename Derived>
Vector<typename Derived::Scalar> silhouette_values(
    const Eigen::MatrixBase<Derived>& x, const Labels& clusters) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  if (clusters.size() != n) {
    throw DimensionError("silhouette: cluster vector length does not match rows");
  }
  std::map<int, Index> compact;
  for (Index i = 0; i < n; ++i) compact.emplace(clusters(i), 0);
  if (compact.size() < 2) {
    throw ConfigError("silhouette is undefined for a single cluster");
  }
  Index next = 0;
  for (auto& [id, slot] : compact) slot = next++;
  const Index c = next;
  std::vector<Index> member(static_cast<std::size_t>(n));
  std::vector<Index> sizes(static_cast<std::size_t>(c), 0);
  for (Index i = 0; i < n; ++i) {
    member[static_cast<std::size_t>(i)] = compact.at(clusters(i));
    ++sizes[static_cast<std::size_t>(member[static_cast<std::size_t>(i)])];
  }

  const Matrix<Scalar> d = pairwise_distances(x);
  Vector<Scalar> sv(n);
  std::vector<Scalar> sums(static_cast<std::size_t>(c));
  for (Index i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), Scalar(0));
    for (Index j = 0; j < n; ++j) {
      sums[static_cast<std::size_t>(member[static_cast<std::size_t>(j)])] += d(i, j);
    }
    const auto own = static_cast<std::size_t>(member[static_cast<std::size_t>(i)]);
    if (sizes[own] == 1) {
      sv(i) = Scalar(0);
      continue;
    }
    const Scalar a = sums[own] / static_cast<Scalar>(sizes[own] - 1);
    Scalar b = std::numeric_limits<Scalar>::infinity();
    for (std::size_t other = 0; other < sums.size(); ++other) {
      if (other == own) continue;
      b = std::min(b, sums[other] / static_cast<Scalar>(sizes[other]));
    }
    const Scalar denom = std::max(a, b);
    sv(i) = denom > Scalar(0) ? (b - a) / denom : Scalar(0);
  }
  return sv;
}

/// Exact nearest-neighbour index under Euclidean distance. Results are
/// ordered by non-decreasing distance, ties broken by ascending index.
template <typename Scalar = double>
class KnnIndex {
 public:
  explicit KnnIndex(Matrix<Scalar> points) : points_(std::move(points)) {}

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const Matrix<Scalar>& points() const { return points_; }

  /// min(K, available) nearest stored points to q. `exclude` (if >= 0) is
  /// skipped, which gives "all other points" queries for a stored row.
  template <typename Derived>
  std::vector<Index> query(const Eigen::MatrixBase<Derived>& q, Index K,
                           Index exclude = -1) const {
    if (points_.rows() == 0) throw ConfigError("knn query on an empty index");
    if (K < 1) throw ConfigError("knn query needs K >= 1");
    if (q.size() != points_.cols()) {
      throw DimensionError("knn query dimension " + std::to_string(q.size()) +
                           " != index dimension " +
                           std::to_string(points_.cols()));
    }
    std::vector<std::pair<Scalar, Index>> cand;
    cand.reserve(static_cast<std::size_t>(points_.rows()));
    for (Index i = 0; i < points_.rows(); ++i) {
      if (i == exclude) continue;
      cand.emplace_back((points_.row(i) - q.transpose()).squaredNorm(), i);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(K), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take),
                      cand.end());
    std::vector<Index> out(take);
    for (std::size_t i = 0; i < take; ++i) out[i] = cand[i].second;
    return out;
  }

  /// Neighbours of stored row i among all other stored rows.
  std::vector<Index> query_row(Index i, Index K) const {
    return query(points_.row(i).transpose(), K, i);
  }

 private:
  Matrix<Scalar> points_;
};

}  // namespace labelguard
