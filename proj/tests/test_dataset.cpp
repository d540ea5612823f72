#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "labelguard/dataset.hpp"
#include "labelguard/logistic.hpp"

using namespace labelguard;

namespace {

Dataset small() {
  MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  Labels y(3);
  y << 1, 0, 1;
  return Dataset(x, y, {"f1", "f2"});
}

Dataset balanced(Index n_per_class, Index k, std::uint64_t seed) {
  return generate_synthetic(SyntheticSpec{n_per_class, k, 0.8, 0.2, 0.1, seed});
}

}  // namespace

TEST(Dataset, RejectsNonBinaryValues) {
  MatrixXd x(1, 1);
  x << 2;
  EXPECT_THROW(Dataset(x, Labels::Zero(1)), ConfigError);
  EXPECT_THROW(Dataset(MatrixXd::Zero(1, 1), Labels::Constant(1, 3)), ConfigError);
  EXPECT_THROW(Dataset(MatrixXd::Zero(0, 1), Labels::Zero(0)), ConfigError);
  EXPECT_THROW(Dataset(MatrixXd::Zero(2, 1), Labels::Zero(3)), ConfigError);
}

TEST(Dataset, DefaultNamesAndIds) {
  const Dataset ds(MatrixXd::Zero(2, 3), Labels::Zero(2));
  EXPECT_EQ(ds.feature_names(), (std::vector<std::string>{"f0", "f1", "f2"}));
  EXPECT_EQ(ds.row_ids(), (std::vector<std::int64_t>{0, 1}));
}

TEST(LoadDataset, DenseCsv) {
  std::istringstream in("label,f1,f2\n1,1,0\n0,0,1\n1,1,1\n");
  const Dataset ds = read_dataset(in, DataFormat::DenseCsv);
  EXPECT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.k(), 2);
  EXPECT_EQ(ds.feature_names()[1], "f2");
  EXPECT_EQ(ds.labels()(1), 0);
  EXPECT_EQ(ds.features()(2, 1), 1.0);
}

TEST(LoadDataset, SparseList) {
  std::istringstream in("#k=10\n1 3:1 7:1\n0\n");
  const Dataset ds = read_dataset(in, DataFormat::SparseList);
  ASSERT_EQ(ds.k(), 10);
  ASSERT_EQ(ds.n(), 2);
  for (Index c = 0; c < 10; ++c) {
    EXPECT_EQ(ds.features()(0, c), (c == 3 || c == 7) ? 1.0 : 0.0) << c;
  }
  EXPECT_EQ(ds.features().row(1).sum(), 0.0);
}

TEST(LoadDataset, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text, DataFormat f) -> std::size_t {
    std::istringstream in(text);
    try {
      read_dataset(in, f);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("label,a,b\n1,0,1\n0,2,1\n", DataFormat::DenseCsv), 3u);
  EXPECT_EQ(line_of("label,a,b\n1,0\n", DataFormat::DenseCsv), 2u);
  EXPECT_EQ(line_of("#k=4\n1 1:1\n0 4:1\n", DataFormat::SparseList), 3u);
  EXPECT_EQ(line_of("#k=4\n1 2:1 1:1\n", DataFormat::SparseList), 2u);

  std::istringstream empty("");
  EXPECT_THROW(read_dataset(empty, DataFormat::DenseCsv), ParseError);
  std::istringstream header_only("label,a\n");
  EXPECT_THROW(read_dataset(header_only, DataFormat::DenseCsv), ParseError);
}

TEST(LoadDataset, RoundTripBothFormats) {
  const Dataset ds = balanced(30, 12, 5);
  for (DataFormat f : {DataFormat::DenseCsv, DataFormat::SparseList}) {
    std::stringstream buf;
    write_dataset(buf, ds, f);
    const Dataset back = read_dataset(buf, f);
    EXPECT_EQ(back.features(), ds.features()) << to_string(f);
    EXPECT_EQ(back.labels(), ds.labels()) << to_string(f);
  }
}

TEST(Split, SizesFollowRatios) {
  const Dataset ds = balanced(50, 8, 1);
  const DatasetSplit s = split_dataset(ds, {}, 11);
  EXPECT_EQ(s.train.n(), 60);
  EXPECT_EQ(s.validation.n(), 20);
  EXPECT_EQ(s.test.n(), 20);
}

TEST(Split, DeterministicGivenSeed) {
  const Dataset ds = balanced(50, 8, 1);
  const DatasetSplit a = split_dataset(ds, {}, 11);
  const DatasetSplit b = split_dataset(ds, {}, 11);
  EXPECT_EQ(a.train.row_ids(), b.train.row_ids());
  EXPECT_EQ(a.validation.row_ids(), b.validation.row_ids());
  EXPECT_EQ(a.test.row_ids(), b.test.row_ids());
  const DatasetSplit c = split_dataset(ds, {}, 12);
  EXPECT_NE(a.train.row_ids(), c.train.row_ids());
}

TEST(Split, PartitionsTheSource) {
  const Dataset ds = balanced(37, 8, 3);
  const DatasetSplit s = split_dataset(ds, {0.5, 0.3, 0.2}, 4);
  std::multiset<std::int64_t> ids;
  for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
    for (Index i = 0; i < part->n(); ++i) {
      const std::int64_t id = part->row_ids()[static_cast<std::size_t>(i)];
      ids.insert(id);
      EXPECT_EQ(part->features().row(i), ds.features().row(id));
      EXPECT_EQ(part->labels()(i), ds.labels()(id));
    }
  }
  std::multiset<std::int64_t> all(ds.row_ids().begin(), ds.row_ids().end());
  EXPECT_EQ(ids, all);
}

// Every seed of a 5/5 set: each part's class counts are the floor or ceiling
// of the part size times the source class share.
TEST(Split, StratifiedOnTenRows) {
  MatrixXd x = MatrixXd::Zero(10, 1);
  Labels y(10);
  y << 0, 0, 0, 0, 0, 1, 1, 1, 1, 1;
  const Dataset ds(x, y);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const DatasetSplit s = split_dataset(ds, {}, seed);
    for (const Dataset* part : {&s.train, &s.validation, &s.test}) {
      const double share = 0.5 * static_cast<double>(part->n());
      for (int cls : {0, 1}) {
        EXPECT_LE(std::abs(static_cast<double>(part->count_label(cls)) - share), 1.0);
      }
    }
  }
}

TEST(Split, Errors) {
  const Dataset ds = balanced(5, 4, 0);
  EXPECT_THROW(split_dataset(ds, {0.6, 0.2, 0.3}, 0), ConfigError);
  EXPECT_THROW(split_dataset(ds, {1.2, -0.2, 0.0}, 0), ConfigError);
  EXPECT_NO_THROW(split_dataset(ds, {0.6, 0.2, 0.2 + 1e-12}, 0));
  EXPECT_THROW(split_dataset(Dataset(MatrixXd::Zero(2, 1), Labels::Zero(2)), {}, 0),
               ConfigError);
}

TEST(Synthetic, DegenerateRatesGiveSeparableBlocks) {
  const Dataset ds = generate_synthetic({20, 10, 1.0, 0.0, 0.0, 9});
  for (Index i = 0; i < ds.n(); ++i) {
    const int cls = ds.labels()(i);
    EXPECT_EQ(cls, i < 20 ? 0 : 1);
    for (Index c = 0; c < 10; ++c) {
      const bool own = cls == 0 ? c < 5 : c >= 5;
      EXPECT_EQ(ds.features()(i, c), own ? 1.0 : 0.0);
    }
  }
}

TEST(Synthetic, DeterministicGivenSeed) {
  const SyntheticSpec spec{40, 16, 0.7, 0.3, 0.2, 123};
  EXPECT_EQ(generate_synthetic(spec).features(), generate_synthetic(spec).features());
  SyntheticSpec other = spec;
  other.seed = 124;
  EXPECT_NE(generate_synthetic(spec).features(), generate_synthetic(other).features());
}

TEST(Synthetic, LinearModelSeparatesClearBlobs) {
  const Dataset ds = generate_synthetic({100, 20, 0.95, 0.05, 0.0, 2});
  const DatasetSplit s = split_dataset(ds, {}, 3);
  const LogisticModel m = logistic_fit(s.train, {});
  Index correct = 0, total = 0;
  for (const Dataset* held : {&s.validation, &s.test}) {
    const VectorXd scores = logistic_predict(m, held->features());
    for (Index i = 0; i < scores.size(); ++i) {
      correct += (scores(i) >= 0.5 ? 1 : 0) == held->labels()(i);
    }
    total += scores.size();
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
}

TEST(Synthetic, Errors) {
  EXPECT_THROW(generate_synthetic({10, 1, 0.8, 0.2, 0.0, 0}), ConfigError);
  EXPECT_THROW(generate_synthetic({10, 8, 0.2, 0.8, 0.0, 0}), ConfigError);
  EXPECT_THROW(generate_synthetic({10, 8, 0.8, 0.2, 1.5, 0}), ConfigError);
}

TEST(SelectTopFeatures, FollowsRankingOrder) {
  MatrixXd x = MatrixXd::Zero(2, 5);
  x.row(0) << 1, 0, 1, 0, 1;
  const Dataset ds(x, Labels::Zero(2));
  const FeatureRanking r = make_ranking((VectorXd(5) << 0.1, 0.5, 0.2, 0.4, 0.0).finished());
  EXPECT_EQ(r.order, (std::vector<Index>{1, 3, 2, 0, 4}));
  const Dataset top = select_top_features(ds, r, 3);
  EXPECT_EQ(top.feature_names(), (std::vector<std::string>{"f1", "f3", "f2"}));
  EXPECT_EQ(top.features()(0, 2), 1.0);

  const Dataset one = select_top_features(ds, r, 1);
  EXPECT_EQ(one.features().col(0), ds.features().col(1));
  EXPECT_THROW(select_top_features(ds, r, 6), ConfigError);
  EXPECT_THROW(select_top_features(ds, r, 0), ConfigError);
}

TEST(SelectTopFeatures, FullSelectionInvertsToInput) {
  const Dataset ds = balanced(10, 9, 8);
  VectorXd imp(9);
  imp << 3, 1, 4, 1, 5, 9, 2, 6, 5;
  const FeatureRanking r = make_ranking(imp);
  const Dataset perm = select_top_features(ds, r, 9);
  MatrixXd back(ds.n(), ds.k());
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    back.col(r.order[i]) = perm.features().col(static_cast<Index>(i));
  }
  EXPECT_EQ(back, ds.features());
  EXPECT_EQ(perm.labels(), ds.labels());
}

TEST(MakeRanking, TiesByAscendingIndex) {
  const FeatureRanking r = make_ranking(VectorXd::Zero(4));
  EXPECT_EQ(r.order, (std::vector<Index>{0, 1, 2, 3}));
}
