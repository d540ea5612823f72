#include "labelguard/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>

#include "labelguard/random.hpp"

namespace labelguard {

namespace {

using MatrixXi = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>;

constexpr int kFormatVersion = 1;

struct Activations {
  std::array<MatrixXd, 3> conv_in;
  std::array<MatrixXd, 3> conv_out;
  std::array<MatrixXi, 2> pool_arg;
  double logit = 0.0;
};

/// Stride equals kernel width, so the unfolded input is a reshape of the
/// first 2 * out_len columns.
Eigen::Map<const MatrixXd> unfold(const MatrixXd& in, Index out_len) {
  return {in.data(), Cnn1dModel::kKernel * in.rows(), out_len};
}

MatrixXd max_pool(const MatrixXd& in, Index out_len, MatrixXi& arg) {
  MatrixXd out(in.rows(), out_len);
  arg.resize(in.rows(), out_len);
  for (Index t = 0; t < out_len; ++t) {
    const Index start = t * Cnn1dModel::kPoolStride;
    for (Index c = 0; c < in.rows(); ++c) {
      Index best = start;
      for (Index j = start + 1; j < start + Cnn1dModel::kPool; ++j) {
        if (in(c, j) > in(c, best)) best = j;
      }
      out(c, t) = in(c, best);
      arg(c, t) = best;
    }
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

CnnShapes Cnn1dModel::shapes(Index k) {
  CnnShapes s;
  s.input = k;
  s.conv1 = conv_length(k);
  s.pool1 = pool_length(s.conv1);
  s.conv2 = conv_length(s.pool1);
  s.pool2 = pool_length(s.conv2);
  s.conv3 = conv_length(s.pool2);
  s.flat = s.conv3 * kFilters[2];
  if (s.conv3 < 1) {
    throw DimensionError("input length " + std::to_string(k) +
                         " is too short for the conv/pool stack; minimum is " +
                         std::to_string(min_input_length()));
  }
  return s;
}

Index Cnn1dModel::min_input_length() {
  Index k = 1;
  while (conv_length(pool_length(conv_length(pool_length(conv_length(k))))) < 1) ++k;
  return k;
}

Cnn1dModel::Offsets Cnn1dModel::offsets_for(const CnnShapes& s) {
  Offsets o;
  Index at = 0;
  Index in_ch = 1;
  for (std::size_t l = 0; l < 3; ++l) {
    o.in_channels[l] = in_ch;
    o.weight[l] = at;
    at += kFilters[l] * kKernel * in_ch;
    o.bias[l] = at;
    at += kFilters[l];
    in_ch = kFilters[l];
  }
  o.dense = at;
  o.total = at + s.flat + 1;
  return o;
}

Cnn1dModel::Cnn1dModel(CnnShapes shapes, VectorXd params)
    : shapes_(shapes), offsets_(offsets_for(shapes)), params_(std::move(params)) {
  if (params_.size() != offsets_.total) {
    throw DimensionError("CNN parameter vector has " +
                         std::to_string(params_.size()) + " entries, expected " +
                         std::to_string(offsets_.total));
  }
}

Cnn1dModel Cnn1dModel::initialize(Index k, std::uint64_t seed) {
  const CnnShapes s = shapes(k);
  const Offsets o = offsets_for(s);
  VectorXd params = VectorXd::Zero(o.total);
  Rng rng(seed);
  for (std::size_t l = 0; l < 3; ++l) {
    const Index fan_in = kKernel * o.in_channels[l];
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (Index i = o.weight[l]; i < o.bias[l]; ++i) params(i) = rng.uniform(-limit, limit);
  }
  const double limit = std::sqrt(3.0 / static_cast<double>(s.flat));
  for (Index i = o.dense; i < o.total - 1; ++i) params(i) = rng.uniform(-limit, limit);
  return Cnn1dModel(s, std::move(params));
}

void Cnn1dModel::set_parameters(const VectorXd& params) {
  if (params.size() != params_.size()) {
    throw DimensionError("CNN parameter vector size mismatch");
  }
  params_ = params;
}

Eigen::Map<const MatrixXd> Cnn1dModel::conv_weight(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_.weight[l], kFilters[l],
          kKernel * offsets_.in_channels[l]};
}

Eigen::Map<const VectorXd> Cnn1dModel::conv_bias(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + offsets_.bias[l], kFilters[l]};
}

Eigen::Map<const VectorXd> Cnn1dModel::dense_weight() const {
  return {params_.data() + offsets_.dense, shapes_.flat};
}

namespace {

Activations forward(const Cnn1dModel& m, const Eigen::Ref<const VectorXd>& x) {
  const CnnShapes& s = m.layer_shapes();
  const std::array<Index, 3> conv_len{s.conv1, s.conv2, s.conv3};
  const std::array<Index, 2> pool_len{s.pool1, s.pool2};
  Activations a;
  a.conv_in[0] = x.transpose();
  for (int l = 0; l < 3; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    a.conv_out[ul] = m.conv_weight(l) * unfold(a.conv_in[ul], conv_len[ul]);
    a.conv_out[ul].colwise() += m.conv_bias(l);
    if (l < 2) {
      a.conv_in[ul + 1] = max_pool(a.conv_out[ul], pool_len[ul], a.pool_arg[ul]);
    }
  }
  const Eigen::Map<const VectorXd> flat(a.conv_out[2].data(), s.flat);
  a.logit = m.dense_weight().dot(flat) + m.dense_bias();
  return a;
}

}  // namespace

double Cnn1dModel::logit(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != shapes_.input) {
    throw DimensionError("CNN input has " + std::to_string(x.size()) +
                         " features, model expects " + std::to_string(shapes_.input));
  }
  return forward(*this, x).logit;
}

double Cnn1dModel::loss(const MatrixXd& x, const VectorXd& y, VectorXd* grad) const {
  if (x.cols() != shapes_.input) {
    throw DimensionError("CNN input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(shapes_.input));
  }
  if (x.rows() != y.size() || x.rows() == 0) {
    throw DimensionError("CNN loss: rows and targets differ or are empty");
  }
  const auto n = static_cast<double>(x.rows());
  if (grad) *grad = VectorXd::Zero(params_.size());
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const Activations a = forward(*this, x.row(i).transpose());
    total += softplus(a.logit) - y(i) * a.logit;
    if (!grad) continue;

    const double dz = (sigmoid(a.logit) - y(i)) / n;
    VectorXd& g = *grad;
    const Eigen::Map<const VectorXd> flat(a.conv_out[2].data(), shapes_.flat);
    g.segment(offsets_.dense, shapes_.flat) += dz * flat;
    g(offsets_.total - 1) += dz;

    MatrixXd d_out = Eigen::Map<const MatrixXd>(dense_weight().data(), kFilters[2],
                                                shapes_.conv3) * dz;
    for (int l = 2; l >= 0; --l) {
      const auto ul = static_cast<std::size_t>(l);
      const MatrixXd& in = a.conv_in[ul];
      const Index out_len = d_out.cols();
      Eigen::Map<MatrixXd> dw(g.data() + offsets_.weight[ul], kFilters[ul],
                              kKernel * offsets_.in_channels[ul]);
      dw.noalias() += d_out * unfold(in, out_len).transpose();
      g.segment(offsets_.bias[ul], kFilters[ul]) += d_out.rowwise().sum();
      if (l == 0) break;

      MatrixXd d_in = MatrixXd::Zero(in.rows(), in.cols());
      Eigen::Map<MatrixXd>(d_in.data(), kKernel * in.rows(), out_len).noalias() =
          conv_weight(l).transpose() * d_out;
      // Route through the max-pool that produced `in`.
      const MatrixXi& arg = a.pool_arg[ul - 1];
      MatrixXd d_prev = MatrixXd::Zero(a.conv_out[ul - 1].rows(), a.conv_out[ul - 1].cols());
      for (Index t = 0; t < arg.cols(); ++t) {
        for (Index c = 0; c < arg.rows(); ++c) d_prev(c, arg(c, t)) += d_in(c, t);
      }
      d_out = std::move(d_prev);
    }
  }
  return total / n;
}

nlohmann::json Cnn1dModel::to_json() const {
  return nlohmann::json{{"format", "labelguard-cnn1d"},
                        {"version", kFormatVersion},
                        {"input_length", shapes_.input},
                        {"parameters", std::vector<double>(params_.data(),
                                                           params_.data() + params_.size())}};
}

Cnn1dModel Cnn1dModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "labelguard-cnn1d") {
    throw ParseError("not a labelguard-cnn1d model", 0);
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw ParseError("unsupported model version", 0);
  }
  const auto k = j.at("input_length").get<Index>();
  const auto values = j.at("parameters").get<std::vector<double>>();
  return Cnn1dModel(shapes(k), Eigen::Map<const VectorXd>(values.data(),
                                                          static_cast<Index>(values.size())));
}

Cnn1dModel cnn_fit(const Dataset& train, const TrainConfig& cfg,
                   std::vector<double>* epoch_losses) {
  cfg.validate();
  if (train.n() < cfg.batch_size) {
    throw ConfigError("training set has " + std::to_string(train.n()) +
                      " rows, fewer than batch_size " + std::to_string(cfg.batch_size));
  }
  Cnn1dModel model = Cnn1dModel::initialize(train.k(), cfg.seed);
  const MatrixXd& x = train.features();
  const VectorXd y = train.labels().cast<double>();
  if (epoch_losses) {
    epoch_losses->clear();
    epoch_losses->push_back(model.loss(x, y));
  }

  Rng rng(derive_seed(cfg.seed, "cnn/shuffle"));
  const Index p = model.parameter_count();
  VectorXd m = VectorXd::Zero(p), v = VectorXd::Zero(p), grad(p);
  VectorXd params = model.parameters();
  std::vector<Index> order(static_cast<std::size_t>(train.n()));
  std::iota(order.begin(), order.end(), Index{0});
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto b = static_cast<Index>(end - start);
      MatrixXd xb(b, x.cols());
      VectorXd yb(b);
      for (Index r = 0; r < b; ++r) {
        const Index src = order[start + static_cast<std::size_t>(r)];
        xb.row(r) = x.row(src);
        yb(r) = y(src);
      }
      model.loss(xb, yb, &grad);
      ++step;
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      params.array() -= cfg.learning_rate * (m.array() / c1) /
                        ((v.array() / c2).sqrt() + cfg.epsilon);
      model.set_parameters(params);
    }
    if (epoch_losses) epoch_losses->push_back(model.loss(x, y));
  }
  return model;
}

Prediction cnn_predict(const Cnn1dModel& model, const MatrixXd& x) {
  if (x.cols() != model.input_length()) {
    throw DimensionError("CNN input has " + std::to_string(x.cols()) +
                         " features, model expects " +
                         std::to_string(model.input_length()));
  }
  Prediction p;
  p.scores.resize(x.rows());
  p.labels.resize(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    // Saturated logits still map strictly inside (0, 1).
    p.scores(i) = std::clamp(sigmoid(model.logit(x.row(i).transpose())),
                             std::numeric_limits<double>::min(),
                             std::nextafter(1.0, 0.0));
    p.labels(i) = p.scores(i) >= 0.5 ? 1 : 0;
  }
  return p;
}

void save_model(const std::filesystem::path& path, const Cnn1dModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model.to_json().dump(2) << '\n';
}

Cnn1dModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Cnn1dModel::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
}

}  // namespace labelguard
