#pragma once

#include <functional>

#include <Eigen/SparseCore>

#include "labelguard/core.hpp"

namespace labelguard {

struct PropagationConfig {
  Index kernel_k = 7;
  /// Spreading weight on the graph term; 1 - alpha goes to the seed labels.
  double alpha = 0.2;
  int max_iter = 1000;
  /// Stop when the largest entry change of the label distribution is below.
  double tol = 1e-3;

  void validate() const;
};

/// KNN affinity over a point set. Each point links to its kernel_k nearest
/// other points (weight 1, ties by ascending index); the directed graph A is
/// symmetrised as W = (A + A^T) / 2, so mutual neighbours weigh 1 and
/// one-sided neighbours 0.5.
struct AffinityGraph {
  Eigen::SparseMatrix<double> adjacency;
  Index kernel_k = 0;

  static AffinityGraph knn(const MatrixXd& points, Index kernel_k);

  Index size() const { return adjacency.rows(); }
  VectorXd degrees() const;
  /// Component id per node (BFS order of discovery).
  Eigen::VectorXi components() const;
};

struct PropagationResult {
  /// Readout for the unlabeled rows (argmax, ties to 0).
  Labels labels;
  /// Readout for every joint row, labeled rows first.
  Labels all_labels;
  /// Final class distribution, (n_lab + n_unlab) x 2.
  MatrixXd distribution;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
  /// Unlabeled rows whose graph component holds no labeled point. They get
  /// the majority label of y_lab.
  Mask unreached;
};

/// Called after every update with the iteration count and current F.
using IterationObserver = std::function<void(int, const MatrixXd&)>;

/// Hard-clamped propagation: F <- T F with T = D^-1 W, labeled rows reset to
/// their one-hot labels after every step. Unlabeled rows start at zero.
PropagationResult label_propagation(const MatrixXd& x_lab, const Labels& y_lab,
                                    const MatrixXd& x_unlab,
                                    const PropagationConfig& cfg,
                                    const IterationObserver& observer = {});

/// Soft-clamped spreading: F <- alpha S F + (1 - alpha) Y0 with
/// S = D^-1/2 W D^-1/2.
PropagationResult label_spreading(const MatrixXd& x_lab, const Labels& y_lab,
                                  const MatrixXd& x_unlab,
                                  const PropagationConfig& cfg,
                                  const IterationObserver& observer = {});

/// Fixed point of label spreading from the dense solve
/// (I - alpha S) F = (1 - alpha) Y0. Intended for small graphs.
MatrixXd label_spreading_exact(const MatrixXd& x_lab, const Labels& y_lab,
                               const MatrixXd& x_unlab,
                               const PropagationConfig& cfg);

}  // namespace labelguard
