#include "labelguard/logistic.hpp"

#include <algorithm>
#include <limits>

#include "labelguard/cnn.hpp"

namespace labelguard {

namespace {

void check_dims(const LogisticModel& model, const MatrixXd& x) {
  if (x.cols() != model.weights.size()) {
    throw DimensionError("logistic model expects " +
                         std::to_string(model.weights.size()) + " features, got " +
                         std::to_string(x.cols()));
  }
}

}  // namespace

double logistic_loss(const LogisticModel& model, const MatrixXd& x,
                     const VectorXd& y, VectorXd* grad) {
  check_dims(model, x);
  if (x.rows() != y.size() || x.rows() == 0) {
    throw DimensionError("logistic loss: rows and targets differ or are empty");
  }
  const VectorXd z = (x * model.weights).array() + model.bias;
  const auto n = static_cast<double>(x.rows());
  double total = 0.0;
  VectorXd residual(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    total += softplus(z(i)) - y(i) * z(i);
    residual(i) = sigmoid(z(i)) - y(i);
  }
  if (grad) {
    grad->resize(x.cols() + 1);
    grad->head(x.cols()) = x.transpose() * residual / n;
    (*grad)(x.cols()) = residual.sum() / n;
  }
  return total / n;
}

LogisticModel logistic_fit(const MatrixXd& x, const Labels& y, const LogisticConfig& cfg) {
  if (cfg.iters < 0 || !(cfg.lr > 0.0)) {
    throw ConfigError("logistic needs iters >= 0 and lr > 0");
  }
  if (x.rows() != y.size()) throw DimensionError("logistic fit: rows and labels differ");
  LogisticModel model{VectorXd::Zero(x.cols()), 0.0};
  const VectorXd target = y.cast<double>();
  VectorXd grad;
  for (int it = 0; it < cfg.iters; ++it) {
    logistic_loss(model, x, target, &grad);
    model.weights -= cfg.lr * grad.head(x.cols());
    model.bias -= cfg.lr * grad(x.cols());
  }
  return model;
}

VectorXd logistic_predict(const LogisticModel& model, const MatrixXd& x) {
  check_dims(model, x);
  VectorXd z = (x * model.weights).array() + model.bias;
  return z.unaryExpr([](double v) {
    return std::clamp(sigmoid(v), std::numeric_limits<double>::min(),
                      std::nextafter(1.0, 0.0));
  });
}

}  // namespace labelguard
