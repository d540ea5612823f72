#include <gtest/gtest.h>

#include <filesystem>

#include "labelguard/cnn.hpp"
#include "labelguard/forest.hpp"
#include "labelguard/logistic.hpp"
#include "labelguard/random.hpp"
#include "oracles.hpp"

using namespace labelguard;

namespace {

MatrixXd random_binary(Rng& rng, Index n, Index k) {
  MatrixXd x(n, k);
  for (Index i = 0; i < x.size(); ++i) x(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return x;
}

double accuracy(const Labels& a, const Labels& b) {
  return static_cast<double>((a.array() == b.array()).count()) / static_cast<double>(a.size());
}

}  // namespace

TEST(CnnShapes, ClosedFormArithmetic) {
  for (Index k = Cnn1dModel::min_input_length(); k < 400; k += 7) {
    const CnnShapes s = Cnn1dModel::shapes(k);
    EXPECT_EQ(s.conv1, (k - 2) / 2 + 1);
    EXPECT_EQ(s.pool1, (s.conv1 - 4) / 2 + 1);
    EXPECT_EQ(s.conv2, (s.pool1 - 2) / 2 + 1);
    EXPECT_EQ(s.pool2, (s.conv2 - 4) / 2 + 1);
    EXPECT_EQ(s.conv3, (s.pool2 - 2) / 2 + 1);
    EXPECT_EQ(s.flat, s.conv3 * 64);
  }
}

TEST(CnnShapes, MinimumLength) {
  EXPECT_EQ(Cnn1dModel::min_input_length(), 52);
  EXPECT_NO_THROW(Cnn1dModel::shapes(52));
  try {
    Cnn1dModel::shapes(51);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("52"), std::string::npos);
  }
}

TEST(Cnn, ArchitectureConstants) {
  EXPECT_EQ(Cnn1dModel::kFilters, (std::array<Index, 3>{16, 32, 64}));
  EXPECT_EQ(Cnn1dModel::kKernel, 2);
  EXPECT_EQ(Cnn1dModel::kStride, 2);
  EXPECT_EQ(Cnn1dModel::kPool, 4);
  EXPECT_EQ(Cnn1dModel::kPoolStride, 2);
  const Cnn1dModel m = Cnn1dModel::initialize(64, 1);
  // conv1 16*2+16, conv2 32*32+32, conv3 64*64+64, dense flat+1
  EXPECT_EQ(m.parameter_count(), 48 + 1056 + 4160 + m.layer_shapes().flat + 1);
}

TEST(Cnn, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (Index k : {52, 64, 90}) {
    const MatrixXd x = random_binary(rng, 4, k);
    const VectorXd y = (VectorXd(4) << 1, 0, 1, 0).finished();
    Cnn1dModel m = Cnn1dModel::initialize(k, 100 + static_cast<std::uint64_t>(k));
    // Non-zero biases so every bias path is exercised.
    VectorXd p = m.parameters();
    for (Index i = 0; i < p.size(); ++i) p(i) += rng.uniform(-0.05, 0.05);
    m.set_parameters(p);
    VectorXd grad;
    m.loss(x, y, &grad);
    Cnn1dModel probe = m;
    const auto c = oracle::kink_aware_check(
        [&](const VectorXd& q) {
          probe.set_parameters(q);
          return probe.loss(x, y);
        },
        p, grad);
    EXPECT_LE(c.smooth_error, 1e-4) << "k=" << k;
    EXPECT_LE(c.kink_error, 1e-4) << "k=" << k;
    EXPECT_LT(c.kinks, c.checked / 100 + 1) << "k=" << k;
  }
}

TEST(Cnn, ZeroEpochsKeepsInitialisation) {
  const Dataset ds = generate_synthetic({20, 64, 1.0, 0.0, 0.0, 1});
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 9;
  const Cnn1dModel m = cnn_fit(ds, cfg);
  EXPECT_EQ(m.parameters(), Cnn1dModel::initialize(64, 9).parameters());
}

TEST(Cnn, ZeroDenseWeightsScoreHalf) {
  Cnn1dModel m = Cnn1dModel::initialize(64, 3);
  VectorXd p = m.parameters();
  p.tail(m.layer_shapes().flat + 1).setZero();
  m.set_parameters(p);
  Rng rng(1);
  const Prediction pred = cnn_predict(m, random_binary(rng, 10, 64));
  EXPECT_EQ(pred.scores, VectorXd::Constant(10, 0.5));
  EXPECT_EQ(pred.labels, Labels::Ones(10));
}

TEST(Cnn, ScoreMonotoneInDenseBias) {
  Cnn1dModel m = Cnn1dModel::initialize(64, 3);
  Rng rng(2);
  const MatrixXd x = random_binary(rng, 1, 64);
  double prev = 0.0;
  for (double b : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    VectorXd p = m.parameters();
    p(p.size() - 1) = b;
    m.set_parameters(p);
    const double s = cnn_predict(m, x).scores(0);
    EXPECT_GT(s, prev);
    EXPECT_LT(s, 1.0);
    prev = s;
  }
}

TEST(Cnn, ScoresStayInsideUnitInterval) {
  Cnn1dModel m = Cnn1dModel::initialize(64, 3);
  VectorXd p = m.parameters();
  p(p.size() - 1) = 800.0;
  m.set_parameters(p);
  Rng rng(3);
  const Prediction pred = cnn_predict(m, random_binary(rng, 5, 64));
  EXPECT_LT(pred.scores.maxCoeff(), 1.0);
  p(p.size() - 1) = -800.0;
  m.set_parameters(p);
  EXPECT_GT(cnn_predict(m, random_binary(rng, 5, 64)).scores.minCoeff(), 0.0);
}

TEST(Cnn, FitsSeparableData) {
  const Dataset train = generate_synthetic({20, 64, 1.0, 0.0, 0.0, 4});
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 8;
  std::vector<double> losses;
  const Cnn1dModel m = cnn_fit(train, cfg, &losses);
  EXPECT_EQ(accuracy(cnn_predict(m, train.features()).labels, train.labels()), 1.0);
  ASSERT_EQ(losses.size(), 51u);
  for (std::size_t e = 0; e + 5 < losses.size(); ++e) EXPECT_LE(losses[e + 5], losses[e] + 1e-6);
}

TEST(Cnn, GeneralisesToHeldOutBlobs) {
  const Dataset all = generate_synthetic({60, 64, 0.9, 0.1, 0.0, 12});
  const DatasetSplit s = split_dataset(all, {}, 2);
  TrainConfig cfg;
  cfg.seed = 3;
  const Cnn1dModel m = cnn_fit(s.train, cfg);
  EXPECT_GE(accuracy(cnn_predict(m, s.test.features()).labels, s.test.labels()), 0.95);
}

TEST(Cnn, Deterministic) {
  const Dataset train = generate_synthetic({20, 64, 0.8, 0.2, 0.1, 4});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 1;
  EXPECT_EQ(cnn_fit(train, cfg).parameters(), cnn_fit(train, cfg).parameters());
}

TEST(Cnn, Errors) {
  const Dataset narrow = generate_synthetic({10, 40, 1.0, 0.0, 0.0, 1});
  EXPECT_THROW(cnn_fit(narrow, {}), DimensionError);
  const Dataset tiny = generate_synthetic({4, 64, 1.0, 0.0, 0.0, 1});
  EXPECT_THROW(cnn_fit(tiny, {}), ConfigError);  // n < batch_size
  const Cnn1dModel m = Cnn1dModel::initialize(64, 1);
  EXPECT_THROW(cnn_predict(m, MatrixXd::Zero(2, 63)), DimensionError);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.beta1 = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Cnn, SaveLoadRoundTripIsExact) {
  const Cnn1dModel m = Cnn1dModel::initialize(70, 44);
  const auto path = std::filesystem::temp_directory_path() / "labelguard_cnn_roundtrip.json";
  save_model(path, m);
  const Cnn1dModel back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.parameters(), m.parameters());
  EXPECT_EQ(back.input_length(), 70);
}

TEST(Logistic, FeatureEqualsLabel) {
  MatrixXd x(6, 1);
  x << 0, 1, 0, 1, 1, 0;
  const Labels y = x.col(0).cast<int>();
  const LogisticModel m = logistic_fit(x, y, {});
  EXPECT_GT(m.weights(0), 0.0);
  const VectorXd s = logistic_predict(m, x);
  EXPECT_EQ(accuracy((s.array() >= 0.5).cast<int>().matrix(), y), 1.0);
}

TEST(Logistic, ZeroIterationsScoreHalf) {
  Rng rng(4);
  const LogisticModel m = logistic_fit(random_binary(rng, 5, 3), Labels::Ones(5), {0, 0.5});
  EXPECT_EQ(logistic_predict(m, random_binary(rng, 4, 3)), VectorXd::Constant(4, 0.5));
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  const MatrixXd x = random_binary(rng, 4, 7);
  const VectorXd y = (VectorXd(4) << 1, 1, 0, 0).finished();
  LogisticModel m{VectorXd(7), 0.3};
  for (Index i = 0; i < 7; ++i) m.weights(i) = rng.uniform(-1, 1);
  VectorXd grad;
  logistic_loss(m, x, y, &grad);
  VectorXd at(8);
  at << m.weights, m.bias;
  const VectorXd num = oracle::numeric_gradient(
      [&](const VectorXd& p) {
        return logistic_loss(LogisticModel{p.head(7), p(7)}, x, y);
      },
      at);
  EXPECT_LE(oracle::max_relative_error(grad, num), 1e-6);
}

TEST(Logistic, DimensionMismatch) {
  const LogisticModel m{VectorXd::Zero(3), 0.0};
  EXPECT_THROW(logistic_predict(m, MatrixXd::Zero(2, 4)), DimensionError);
}

TEST(Forest, PerfectPredictorRanksFirst) {
  Rng rng(8);
  MatrixXd x = random_binary(rng, 80, 3);
  const Labels y = x.col(0).cast<int>();
  const FeatureRanking r = rf_rank_features(Dataset(x, y), {50, 6, 3});
  EXPECT_EQ(r.order[0], 0);
  EXPECT_NEAR(r.importance.sum(), 1.0, 1e-12);
  EXPECT_GE(r.importance.minCoeff(), 0.0);
}

TEST(Forest, ConstantLabelsGiveZeroImportance) {
  Rng rng(8);
  const FeatureRanking r = rf_rank_features(Dataset(random_binary(rng, 30, 4), Labels::Ones(30)), {});
  EXPECT_EQ(r.importance, VectorXd::Zero(4));
  EXPECT_EQ(r.order, (std::vector<Index>{0, 1, 2, 3}));
}

TEST(Forest, Deterministic) {
  const Dataset ds = generate_synthetic({40, 20, 0.7, 0.3, 0.2, 5});
  const FeatureRanking a = rf_rank_features(ds, {30, 5, 77});
  const FeatureRanking b = rf_rank_features(ds, {30, 5, 77});
  EXPECT_EQ(a.importance, b.importance);
  EXPECT_EQ(a.order, b.order);
}

TEST(Forest, LeavesPartitionInputs) {
  const Dataset ds = generate_synthetic({30, 8, 0.7, 0.3, 0.0, 6});
  const ForestRegressor f = fit_forest(ds.features(), ds.labels().cast<double>(), {10, 4, 2});
  for (const RegressionTree& t : f.trees) {
    for (Index i = 0; i < ds.n(); ++i) {
      const auto& leaf = t.nodes[static_cast<std::size_t>(t.leaf(ds.features().row(i).transpose()))];
      EXPECT_EQ(leaf.feature, -1);
      EXPECT_GE(leaf.value, 0.0);
      EXPECT_LE(leaf.value, 1.0);
    }
  }
}
