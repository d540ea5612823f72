#pragma once

#include <iosfwd>

#include "labelguard/cluster.hpp"
#include "labelguard/core.hpp"
#include "labelguard/dataset.hpp"

namespace labelguard {

/// Outcome of the silhouette-guided label flip on a training set.
struct FlipResult {
  Labels poisoned_labels;
  /// flip_mask(i) holds exactly when sv(i) <= 0.
  Mask flip_mask;
  VectorXd sv;
  KMeansModel kmeans;
  /// k-means left a cluster empty, so no silhouette exists and nothing flips.
  bool degenerate = false;

  Index flip_count() const { return flip_mask.count(); }
};

/// Clusters the training features with 2-means, scores every sample's
/// silhouette against its cluster and flips the label of each sample with a
/// non-positive silhouette. Labels never influence which rows flip.
FlipResult sclfa(const Dataset& train, const KMeansOptions& options = {});

/// Same flip rule over a given cluster assignment (no k-means fit).
FlipResult sclfa_from_assignment(const Dataset& train, const Labels& assignment);

/// 1 - label where the mask is set. Applying it twice is the identity.
Labels apply_flip(const Labels& labels, const Mask& mask);

/// CSV `row_id,sv,flipped`, one line per training row.
void write_flips(std::ostream& out, const Dataset& train, const FlipResult& flips);

struct FlipRecord {
  std::vector<std::int64_t> row_ids;
  VectorXd sv;
  Mask flipped;
};
FlipRecord read_flips(std::istream& in);

}  // namespace labelguard
