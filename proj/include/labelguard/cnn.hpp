#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "labelguard/core.hpp"
#include "labelguard/dataset.hpp"

namespace labelguard {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 30;
  Index batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Output lengths of every stage for an input of length k.
struct CnnShapes {
  Index input = 0;
  Index conv1 = 0, pool1 = 0;
  Index conv2 = 0, pool2 = 0;
  Index conv3 = 0;
  Index flat = 0;
};

/// Binary classifier over a 1-channel sequence of k binary features:
///
///   Conv1D(16, kernel 2, stride 2) -> MaxPool(4, stride 2)
///   -> Conv1D(32, 2, 2) -> MaxPool(4, 2) -> Conv1D(64, 2, 2)
///   -> Flatten -> Dense(1) -> sigmoid
///
/// Convolutions are valid (unpadded) with linear activation. All parameters
/// live in one flat vector: per conv layer the weight matrix
/// (out_channels x 2*in_channels, column-major, taps outer) then the bias,
/// followed by the dense weights and bias.
class Cnn1dModel {
 public:
  static constexpr std::array<Index, 3> kFilters{16, 32, 64};
  static constexpr Index kKernel = 2;
  static constexpr Index kStride = 2;
  static constexpr Index kPool = 4;
  static constexpr Index kPoolStride = 2;

  static Index conv_length(Index len) {
    return len < kKernel ? 0 : (len - kKernel) / kStride + 1;
  }
  static Index pool_length(Index len) {
    return len < kPool ? 0 : (len - kPool) / kPoolStride + 1;
  }
  /// Throws DimensionError (naming the minimum) when k is too short.
  static CnnShapes shapes(Index k);
  /// Smallest input length that yields at least one output position.
  static Index min_input_length();

  /// Uniform fan-in initialisation in [-sqrt(3/fan_in), sqrt(3/fan_in)],
  /// zero biases.
  static Cnn1dModel initialize(Index k, std::uint64_t seed);

  Index input_length() const { return shapes_.input; }
  const CnnShapes& layer_shapes() const { return shapes_; }

  const VectorXd& parameters() const { return params_; }
  void set_parameters(const VectorXd& params);
  Index parameter_count() const { return params_.size(); }

  Eigen::Map<const MatrixXd> conv_weight(int layer) const;
  Eigen::Map<const VectorXd> conv_bias(int layer) const;
  Eigen::Map<const VectorXd> dense_weight() const;
  double dense_bias() const { return params_(params_.size() - 1); }

  /// Pre-sigmoid output for one sample.
  double logit(const Eigen::Ref<const VectorXd>& x) const;

  /// Mean binary cross-entropy over the rows of x. When `grad` is non-null
  /// it receives the gradient with respect to parameters().
  double loss(const MatrixXd& x, const VectorXd& y, VectorXd* grad = nullptr) const;

  nlohmann::json to_json() const;
  static Cnn1dModel from_json(const nlohmann::json& j);

 private:
  Cnn1dModel(CnnShapes shapes, VectorXd params);

  struct Offsets {
    std::array<Index, 3> weight{};
    std::array<Index, 3> bias{};
    std::array<Index, 3> in_channels{};
    Index dense = 0;
    Index total = 0;
  };
  static Offsets offsets_for(const CnnShapes& shapes);

  CnnShapes shapes_;
  Offsets offsets_;
  VectorXd params_;
};

struct Prediction {
  VectorXd scores;  // sigmoid outputs in (0, 1)
  Labels labels;    // score >= 0.5
};

/// Adam on mean binary cross-entropy. Mini-batches follow a seeded shuffle
/// per epoch. `epoch_losses`, when given, receives the full training loss
/// before the first epoch and after every epoch.
Cnn1dModel cnn_fit(const Dataset& train, const TrainConfig& cfg,
                   std::vector<double>* epoch_losses = nullptr);

Prediction cnn_predict(const Cnn1dModel& model, const MatrixXd& x);

void save_model(const std::filesystem::path& path, const Cnn1dModel& model);
Cnn1dModel load_model(const std::filesystem::path& path);

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace labelguard
