#include "labelguard/cluster.hpp"

#include <limits>

#include "labelguard/random.hpp"

namespace labelguard {

namespace {

struct Run {
  MatrixXd centroids;
  Labels assignment;
  double inertia;
  int iterations;
  std::vector<double> trace;
};

int nearest_centroid(const MatrixXd& centroids,
                     const Eigen::Ref<const VectorXd>& p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double assign(const MatrixXd& x, const MatrixXd& centroids, Labels& out) {
  double inertia = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    out(i) = nearest_centroid(centroids, x.row(i).transpose());
    inertia += (x.row(i) - centroids.row(out(i))).squaredNorm();
  }
  return inertia;
}

MatrixXd plus_plus_seed(const MatrixXd& x, int n_clusters, Rng& rng) {
  const Index n = x.rows();
  MatrixXd centroids(n_clusters, x.cols());
  centroids.row(0) = x.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  VectorXd d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (x.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < n_clusters; ++c) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(pick);
    for (Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (x.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

Run lloyd(const MatrixXd& x, MatrixXd centroids, const KMeansOptions& opt) {
  const Index n = x.rows();
  const int kc = opt.n_clusters;
  Labels assignment(n);
  Run run{};
  int it = 0;
  while (true) {
    const double inertia = assign(x, centroids, assignment);
    run.trace.push_back(inertia);
    if (it >= opt.max_iter) break;
    ++it;
    MatrixXd next = MatrixXd::Zero(kc, x.cols());
    VectorXd counts = VectorXd::Zero(kc);
    for (Index i = 0; i < n; ++i) {
      next.row(assignment(i)) += x.row(i);
      counts(assignment(i)) += 1.0;
    }
    for (int c = 0; c < kc; ++c) {
      if (counts(c) > 0) next.row(c) /= counts(c);
    }
    for (int c = 0; c < kc; ++c) {
      if (counts(c) > 0) continue;
      // Empty cluster: move it onto the point worst served by its centroid.
      Index far = 0;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double d = (x.row(i) - next.row(assignment(i))).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      next.row(c) = x.row(far);
      counts(c) = 1.0;
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = std::move(next);
    if (shift < opt.tol) {
      run.trace.push_back(assign(x, centroids, assignment));
      break;
    }
  }
  run.centroids = std::move(centroids);
  run.assignment = std::move(assignment);
  run.inertia = run.trace.back();
  run.iterations = it;
  return run;
}

}  // namespace

int KMeansModel::nearest(const Eigen::Ref<const VectorXd>& point) const {
  if (point.size() != centroids.cols()) {
    throw DimensionError("kmeans predict: dimension mismatch");
  }
  return nearest_centroid(centroids, point);
}

Labels KMeansModel::predict(const MatrixXd& x) const {
  if (x.cols() != centroids.cols()) {
    throw DimensionError("kmeans predict: dimension mismatch");
  }
  Labels out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = nearest_centroid(centroids, x.row(i).transpose());
  return out;
}

KMeansModel kmeans_fit(const MatrixXd& x, const KMeansOptions& options) {
  if (options.n_clusters < 1) throw ConfigError("kmeans needs n_clusters >= 1");
  if (x.rows() < options.n_clusters) {
    throw ConfigError("kmeans needs at least n_clusters samples");
  }
  if (options.max_iter < 0 || options.restarts < 1) {
    throw ConfigError("kmeans needs max_iter >= 0 and restarts >= 1");
  }
  Rng rng(options.seed);
  Run best{};
  bool have = false;
  for (int r = 0; r < options.restarts; ++r) {
    Run run = lloyd(x, plus_plus_seed(x, options.n_clusters, rng), options);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  KMeansModel model;
  model.centroids = std::move(best.centroids);
  model.assignment = std::move(best.assignment);
  model.inertia = best.inertia;
  model.iterations = best.iterations;
  model.inertia_trace = std::move(best.trace);
  std::vector<bool> used(static_cast<std::size_t>(options.n_clusters), false);
  for (Index i = 0; i < model.assignment.size(); ++i) {
    used[static_cast<std::size_t>(model.assignment(i))] = true;
  }
  model.degenerate = std::find(used.begin(), used.end(), false) != used.end();
  return model;
}

}  // namespace labelguard
