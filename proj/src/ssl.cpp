#include "labelguard/ssl.hpp"

#include <deque>
#include <vector>

#include <Eigen/Dense>

#include "labelguard/cluster.hpp"

namespace labelguard {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Problem {
  MatrixXd points;
  MatrixXd seeds;  // one-hot for labeled rows, zero elsewhere
  Index n_lab;
  int majority;
};

Problem make_problem(const MatrixXd& x_lab, const Labels& y_lab,
                     const MatrixXd& x_unlab, const PropagationConfig& cfg) {
  cfg.validate();
  if (x_lab.rows() != y_lab.size()) {
    throw DimensionError("propagation: labeled rows and labels differ in length");
  }
  if (x_unlab.rows() > 0 && x_unlab.cols() != x_lab.cols()) {
    throw DimensionError("propagation: labeled and unlabeled feature counts differ");
  }
  const Index ones = (y_lab.array() == 1).count();
  const Index zeros = (y_lab.array() == 0).count();
  if (ones + zeros != y_lab.size()) {
    throw ConfigError("propagation: labels must be 0 or 1");
  }
  if (ones == 0 || zeros == 0) {
    throw ConfigError("propagation: labeled set must contain both classes");
  }
  Problem p;
  p.n_lab = x_lab.rows();
  p.points.resize(x_lab.rows() + x_unlab.rows(), x_lab.cols());
  p.points << x_lab, x_unlab;
  p.seeds = MatrixXd::Zero(p.points.rows(), 2);
  for (Index i = 0; i < p.n_lab; ++i) p.seeds(i, y_lab(i)) = 1.0;
  p.majority = ones > zeros ? 1 : 0;
  return p;
}

int argmax_row(const MatrixXd& f, Index i) { return f(i, 1) > f(i, 0) ? 1 : 0; }

PropagationResult read_out(const Problem& p, const AffinityGraph& graph,
                           MatrixXd f, int iterations, bool converged,
                           double residual) {
  PropagationResult r;
  const Index total = p.points.rows();
  const Index n_unlab = total - p.n_lab;
  const Eigen::VectorXi comp = graph.components();
  std::vector<bool> comp_has_label(static_cast<std::size_t>(comp.maxCoeff() + 1), false);
  for (Index i = 0; i < p.n_lab; ++i) comp_has_label[static_cast<std::size_t>(comp(i))] = true;

  r.all_labels.resize(total);
  r.labels.resize(n_unlab);
  r.unreached = Mask::Constant(n_unlab, false);
  for (Index i = 0; i < total; ++i) {
    int label = argmax_row(f, i);
    if (i >= p.n_lab && !comp_has_label[static_cast<std::size_t>(comp(i))]) {
      label = p.majority;
      r.unreached(i - p.n_lab) = true;
    }
    r.all_labels(i) = label;
    if (i >= p.n_lab) r.labels(i - p.n_lab) = label;
  }
  r.distribution = std::move(f);
  r.iterations = iterations;
  r.converged = converged;
  r.residual = residual;
  return r;
}

SparseMatrix scale_rows(const SparseMatrix& w, const VectorXd& left,
                        const VectorXd& right) {
  SparseMatrix out = w;
  for (Index col = 0; col < out.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(out, col); it; ++it) {
      it.valueRef() *= left(it.row()) * right(it.col());
    }
  }
  return out;
}

SparseMatrix spreading_operator(const AffinityGraph& graph) {
  const VectorXd deg = graph.degrees();
  const VectorXd inv_sqrt = deg.unaryExpr(
      [](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  return scale_rows(graph.adjacency, inv_sqrt, inv_sqrt);
}

}  // namespace

void PropagationConfig::validate() const {
  if (kernel_k < 1) throw ConfigError("propagation kernel_k must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("propagation alpha must be in (0, 1)");
  }
  if (max_iter < 1) throw ConfigError("propagation max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("propagation tol must be > 0");
}

AffinityGraph AffinityGraph::knn(const MatrixXd& points, Index kernel_k) {
  if (kernel_k < 1) throw ConfigError("kernel_k must be >= 1");
  const Index n = points.rows();
  const KnnIndex<double> index(points);
  std::vector<Eigen::Triplet<double>> triplets;
  if (n >= 2) {
    const Index k = std::min(kernel_k, n - 1);
    triplets.reserve(static_cast<std::size_t>(2 * n * k));
    for (Index i = 0; i < n; ++i) {
      for (Index j : index.query_row(i, k)) {
        triplets.emplace_back(i, j, 0.5);
        triplets.emplace_back(j, i, 0.5);
      }
    }
  }
  AffinityGraph g;
  g.kernel_k = kernel_k;
  g.adjacency.resize(n, n);
  // Duplicate triplets are summed: mutual neighbours reach 1.
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

VectorXd AffinityGraph::degrees() const {
  VectorXd deg = VectorXd::Zero(size());
  for (Index col = 0; col < adjacency.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, col); it; ++it) {
      deg(it.row()) += it.value();
    }
  }
  return deg;
}

Eigen::VectorXi AffinityGraph::components() const {
  const Index n = size();
  Eigen::VectorXi comp = Eigen::VectorXi::Constant(n, -1);
  int next = 0;
  for (Index start = 0; start < n; ++start) {
    if (comp(start) >= 0) continue;
    std::deque<Index> queue{start};
    comp(start) = next;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      // Symmetric adjacency: column u lists the neighbours of u.
      for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, u); it; ++it) {
        if (comp(it.row()) < 0) {
          comp(it.row()) = next;
          queue.push_back(it.row());
        }
      }
    }
    ++next;
  }
  return comp;
}

PropagationResult label_propagation(const MatrixXd& x_lab, const Labels& y_lab,
                                    const MatrixXd& x_unlab,
                                    const PropagationConfig& cfg,
                                    const IterationObserver& observer) {
  const Problem p = make_problem(x_lab, y_lab, x_unlab, cfg);
  const AffinityGraph graph = AffinityGraph::knn(p.points, cfg.kernel_k);
  const VectorXd deg = graph.degrees();
  const VectorXd inv = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / d : 0.0; });
  const SparseMatrix transition =
      scale_rows(graph.adjacency, inv, VectorXd::Ones(deg.size()));

  MatrixXd f = p.seeds;
  int it = 0;
  double residual = 0.0;
  bool converged = false;
  while (it < cfg.max_iter) {
    MatrixXd next = transition * f;
    next.topRows(p.n_lab) = p.seeds.topRows(p.n_lab);
    residual = (next - f).cwiseAbs().maxCoeff();
    f = std::move(next);
    ++it;
    if (observer) observer(it, f);
    if (residual < cfg.tol) {
      converged = true;
      break;
    }
  }
  return read_out(p, graph, std::move(f), it, converged, residual);
}

PropagationResult label_spreading(const MatrixXd& x_lab, const Labels& y_lab,
                                  const MatrixXd& x_unlab,
                                  const PropagationConfig& cfg,
                                  const IterationObserver& observer) {
  const Problem p = make_problem(x_lab, y_lab, x_unlab, cfg);
  const AffinityGraph graph = AffinityGraph::knn(p.points, cfg.kernel_k);
  const SparseMatrix s = spreading_operator(graph);
  const MatrixXd base = (1.0 - cfg.alpha) * p.seeds;

  MatrixXd f = p.seeds;
  int it = 0;
  double residual = 0.0;
  bool converged = false;
  while (it < cfg.max_iter) {
    MatrixXd next = cfg.alpha * (s * f) + base;
    residual = (next - f).cwiseAbs().maxCoeff();
    f = std::move(next);
    ++it;
    if (observer) observer(it, f);
    if (residual < cfg.tol) {
      converged = true;
      break;
    }
  }
  return read_out(p, graph, std::move(f), it, converged, residual);
}

MatrixXd label_spreading_exact(const MatrixXd& x_lab, const Labels& y_lab,
                               const MatrixXd& x_unlab,
                               const PropagationConfig& cfg) {
  const Problem p = make_problem(x_lab, y_lab, x_unlab, cfg);
  const AffinityGraph graph = AffinityGraph::knn(p.points, cfg.kernel_k);
  const MatrixXd s = MatrixXd(spreading_operator(graph));
  const Index n = s.rows();
  const MatrixXd system = MatrixXd::Identity(n, n) - cfg.alpha * s;
  return system.partialPivLu().solve((1.0 - cfg.alpha) * p.seeds);
}

}  // namespace labelguard
