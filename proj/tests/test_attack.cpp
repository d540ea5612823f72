#include <gtest/gtest.h>

#include <sstream>

#include "labelguard/attack.hpp"
#include "labelguard/random.hpp"
#include "oracles.hpp"

using namespace labelguard;

namespace {

std::vector<int> to_vec(const Labels& l) { return {l.data(), l.data() + l.size()}; }

}  // namespace

TEST(Sclfa, SeparableBlobsFlipNothing) {
  const Dataset train = generate_synthetic({100, 64, 1.0, 0.0, 0.0, 3});
  const FlipResult r = sclfa(train, {2, 5});
  EXPECT_FALSE(r.degenerate);
  EXPECT_EQ(r.flip_count(), 0);
  EXPECT_GT(r.sv.minCoeff(), 0.0);
  EXPECT_EQ(r.poisoned_labels, train.labels());
}

TEST(Sclfa, InjectedMisassignmentFlips) {
  MatrixXd x(4, 1);
  x << 0, 0, 1, 1;
  const Dataset train(x, (Labels(4) << 0, 0, 1, 1).finished());
  const FlipResult r = sclfa_from_assignment(train, (Labels(4) << 0, 1, 1, 1).finished());
  // Row 1 sits with its twin in the other cluster: a = 1, b = 0.
  EXPECT_DOUBLE_EQ(r.sv(1), -1.0);
  // Row 0 is a singleton, so its silhouette is 0 and it flips too.
  EXPECT_EQ(r.sv(0), 0.0);
  EXPECT_DOUBLE_EQ(r.sv(2), 0.5);
  EXPECT_EQ(r.flip_mask, (Mask(4) << true, true, false, false).finished());
  EXPECT_EQ(r.poisoned_labels, (Labels(4) << 1, 1, 1, 1).finished());
}

TEST(Sclfa, OverlappingBlobsGolden) {
  const Dataset train = generate_synthetic({200, 16, 0.7, 0.3, 0.1, 1});
  const FlipResult r = sclfa(train, {2, 1});
  std::vector<std::int64_t> flipped;
  for (Index i = 0; i < train.n(); ++i) {
    if (r.flip_mask(i)) flipped.push_back(train.row_ids()[static_cast<std::size_t>(i)]);
  }
  EXPECT_EQ(flipped, (std::vector<std::int64_t>{198, 286, 323, 353, 375}));
}

TEST(Sclfa, MaskEqualsBruteForceSilhouetteSign) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [x, y] = oracle::asymmetric_blobs(30, 12, 0.1, 0.5, seed);
    const Dataset train(x, Eigen::Map<const Labels>(y.data(), static_cast<Index>(y.size())));
    const FlipResult r = sclfa(train, {2, seed});
    const auto sv = oracle::silhouette(x, to_vec(r.kmeans.assignment));
    for (Index i = 0; i < train.n(); ++i) {
      EXPECT_EQ(r.flip_mask(i), sv[static_cast<std::size_t>(i)] <= 0.0) << seed << ' ' << i;
      EXPECT_EQ(r.poisoned_labels(i), r.flip_mask(i) ? 1 - y[static_cast<std::size_t>(i)]
                                                     : y[static_cast<std::size_t>(i)]);
    }
  }
}

TEST(Sclfa, MaskIgnoresLabels) {
  const auto [x, y] = oracle::asymmetric_blobs(40, 10, 0.1, 0.5, 7);
  const Labels labels = Eigen::Map<const Labels>(y.data(), static_cast<Index>(y.size()));
  Rng rng(2);
  std::vector<int> shuffled = y;
  rng.shuffle(shuffled);
  const FlipResult a = sclfa(Dataset(x, labels), {2, 9});
  const FlipResult b = sclfa(
      Dataset(x, Eigen::Map<const Labels>(shuffled.data(), static_cast<Index>(y.size()))), {2, 9});
  EXPECT_EQ(a.flip_mask, b.flip_mask);
  EXPECT_GT(a.flip_count(), 0);
}

TEST(Sclfa, ApplyFlipIsAnInvolution) {
  const Labels y = (Labels(5) << 0, 1, 1, 0, 1).finished();
  const Mask m = (Mask(5) << true, false, true, true, false).finished();
  EXPECT_EQ(apply_flip(y, m), (Labels(5) << 1, 1, 0, 1, 1).finished());
  EXPECT_EQ(apply_flip(apply_flip(y, m), m), y);
  EXPECT_THROW(apply_flip(y, Mask::Constant(4, false)), DimensionError);
}

TEST(Sclfa, IdenticalRowsAreDegenerate) {
  const Dataset train(MatrixXd::Ones(6, 3), (Labels(6) << 0, 1, 0, 1, 0, 1).finished());
  const FlipResult r = sclfa(train);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.flip_count(), 0);
  EXPECT_EQ(r.poisoned_labels, train.labels());
}

TEST(Sclfa, InputLabelsUntouched) {
  const auto [x, y] = oracle::asymmetric_blobs(20, 8, 0.1, 0.6, 4);
  const Dataset train(x, Eigen::Map<const Labels>(y.data(), static_cast<Index>(y.size())));
  const Labels before = train.labels();
  sclfa(train, {2, 1});
  EXPECT_EQ(train.labels(), before);
}

TEST(FlipCsv, RoundTrip) {
  const auto [x, y] = oracle::asymmetric_blobs(15, 8, 0.1, 0.5, 2);
  const Dataset train(x, Eigen::Map<const Labels>(y.data(), static_cast<Index>(y.size())));
  const FlipResult r = sclfa(train, {2, 3});
  std::stringstream buf;
  write_flips(buf, train, r);
  EXPECT_EQ(buf.str().substr(0, 18), "row_id,sv,flipped\n");
  const FlipRecord back = read_flips(buf);
  EXPECT_EQ(back.row_ids, train.row_ids());
  EXPECT_EQ(back.flipped, r.flip_mask);
  EXPECT_EQ(back.sv, r.sv);

  std::istringstream bad("row_id,sv,flipped\n3,0.5,2\n");
  EXPECT_THROW(read_flips(bad), ParseError);
}
