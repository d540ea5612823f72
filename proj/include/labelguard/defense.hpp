#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "labelguard/cnn.hpp"
#include "labelguard/core.hpp"
#include "labelguard/dataset.hpp"
#include "labelguard/logistic.hpp"
#include "labelguard/metrics.hpp"
#include "labelguard/ssl.hpp"

namespace labelguard {

struct KssdConfig {
  Index K = 10;
  /// Minimum majority fraction for a relabel, in [0.5, 1].
  double t = 0.5;

  void validate() const;
};

struct CsdConfig {
  /// Largest accepted |sum of agreement deltas|.
  double threshold = 0.1;
  /// Seed for the 2-means fit on the validation features.
  std::uint64_t seed = 0;

  void validate() const;
};

struct GanConfig {
  /// Top-ranked features eligible for addition.
  Index lambda_features = 16;
  double lesslikely_fraction = 0.1;
  int max_additions = 16;

  void validate() const;
};

/// Corrected training labels plus enough per-row detail to audit them.
struct DefenseResult {
  std::string method;
  Labels corrected;
  /// corrected(i) != poisoned(i)
  Mask changed;
  /// Rule that set each row's label.
  std::vector<std::string> provenance;
  std::vector<std::string> flags;

  // lsd: the three model voters over the training rows.
  Labels vote_ls;
  Labels vote_lp;
  Labels vote_cnn;

  // csd
  VectorXd csd_scores;
  std::vector<std::int64_t> accepted_pool;

  // gan
  std::vector<Index> lesslikely;
  std::vector<int> additions;
};

/// Majority of {spreading, propagation, CNN, poisoned label}; a 2-2 split
/// takes the CNN's label. Validation rows are the labeled set for the two
/// graph models and the CNN's training data.
DefenseResult lsd(const Dataset& train_poisoned, const Dataset& validation,
                  const PropagationConfig& ssl_cfg, const TrainConfig& cnn_cfg);

/// Vote helper shared with tests: returns the winning label and whether the
/// vote was a 2-2 split.
std::pair<int, bool> lsd_vote(int ls, int lp, int cnn, int poisoned);

/// Change in summed agreement (rand, mutual information, homogeneity,
/// Fowlkes-Mallows) between reference labels and clusters when one extra
/// (label, cluster) pair joins them.
double agreement_shift(const Labels& reference, const Labels& clusters, int label,
                       int cluster);

/// Labels every training row with a validation-trained CNN and accepts the
/// rows whose addition to the validation set moves the summed agreement by
/// at most cfg.threshold. Clusters come from 2-means on the validation
/// features; a training row joins the cluster of its nearest centroid.
DefenseResult csd(const Dataset& train_poisoned, const Dataset& validation,
                  const TrainConfig& cnn_cfg, const CsdConfig& cfg);

/// Relabels each row to the majority label of its K nearest other rows when
/// that majority is unique and covers at least a fraction t. All decisions
/// read the input labels, so row order never matters.
DefenseResult kssd(const Dataset& train_poisoned, const KssdConfig& cfg);

/// Greedy feature-addition baseline: the lowest-scored malware rows of a
/// logistic model receive top-ranked benign-prototype features until they
/// score benign, join the training set as malware, and the refit model
/// relabels the training rows.
DefenseResult gan_defense(const Dataset& train_poisoned, const FeatureRanking& ranking,
                          const GanConfig& cfg, const LogisticConfig& lr_cfg);

/// Flipped rows whose corrected label equals the original label.
Index count_restored(const Labels& original, const Mask& flipped, const Labels& corrected);

/// CSV `row_id,poisoned,corrected,changed,provenance`.
void write_defense(std::ostream& out, const Dataset& train_poisoned,
                   const DefenseResult& result);

}  // namespace labelguard
