#pragma once

#include "labelguard/core.hpp"
#include "labelguard/dataset.hpp"

namespace labelguard {

struct LogisticConfig {
  int iters = 500;
  double lr = 0.5;
};

struct LogisticModel {
  VectorXd weights;
  double bias = 0.0;
};

/// Full-batch gradient descent on mean cross-entropy from zero weights.
LogisticModel logistic_fit(const MatrixXd& x, const Labels& y, const LogisticConfig& cfg);
inline LogisticModel logistic_fit(const Dataset& train, const LogisticConfig& cfg) {
  return logistic_fit(train.features(), train.labels(), cfg);
}

/// Malware probability per row, strictly inside (0, 1).
VectorXd logistic_predict(const LogisticModel& model, const MatrixXd& x);

/// Mean cross-entropy; `grad` (if given) receives [d/dw; d/db].
double logistic_loss(const LogisticModel& model, const MatrixXd& x,
                     const VectorXd& y, VectorXd* grad = nullptr);

}  // namespace labelguard
