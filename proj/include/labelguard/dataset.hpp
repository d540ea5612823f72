#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelguard/core.hpp"

namespace labelguard {

/// n x k binary feature matrix with binary labels. Rows carry stable ids
/// assigned at load time so flips and relabelings can be traced through
/// splits and defenses. Immutable after construction.
class Dataset {
 public:
  /// Throws ConfigError if a feature or label is not 0/1, shapes disagree,
  /// or n or k is zero. Empty `feature_names` defaults to f0..f{k-1};
  /// empty `row_ids` defaults to 0..n-1.
  Dataset(MatrixXd features, Labels labels,
          std::vector<std::string> feature_names = {},
          std::vector<std::int64_t> row_ids = {});

  const MatrixXd& features() const { return features_; }
  const Labels& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  Index n() const { return features_.rows(); }
  Index k() const { return features_.cols(); }

  /// Same rows and features, different labels.
  Dataset with_labels(Labels labels) const;
  /// Subset of rows in the given order (ids follow the rows).
  Dataset select_rows(std::span<const Index> rows) const;
  /// Subset of columns in the given order (names follow the columns).
  Dataset select_columns(std::span<const Index> cols) const;

  /// Count of rows labeled `cls`.
  Index count_label(int cls) const { return (labels_.array() == cls).count(); }

 private:
  MatrixXd features_;
  Labels labels_;
  std::vector<std::string> names_;
  std::vector<std::int64_t> row_ids_;
};

enum class DataFormat { DenseCsv, SparseList };

/// "dense-csv" or "sparse-list".
DataFormat parse_data_format(std::string_view name);
std::string_view to_string(DataFormat format);

/// Dense CSV: header `label,<name>,...`, one row per sample, values in {0,1}.
/// Sparse list: `#k=<dim>` header, then `<label> <idx>:1 ...` with 0-based,
/// strictly increasing indices. Throws ParseError naming the offending line.
Dataset read_dataset(std::istream& in, DataFormat format);
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);

void write_dataset(std::ostream& out, const Dataset& ds, DataFormat format);
void save_dataset(const std::filesystem::path& path, const Dataset& ds,
                  DataFormat format);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::uint64_t seed;
};

/// Stratified, seeded split. |train| = round(ratio.train * n),
/// |validation| = round(ratio.validation * n), the remainder is test. Each
/// part's per-class count is the floor or ceiling of its proportional share.
/// Rows keep source order within each part.
DatasetSplit split_dataset(const Dataset& ds, const SplitRatios& ratios,
                           std::uint64_t seed);

struct FeatureRanking {
  VectorXd importance;
  /// Feature indices by descending importance, ties by ascending index.
  std::vector<Index> order;
};

/// Builds the descending order from raw importances (stable on ties).
FeatureRanking make_ranking(VectorXd importance);

/// Keeps columns ranking.order[0..m), in ranking order.
Dataset select_top_features(const Dataset& ds, const FeatureRanking& ranking,
                            Index m);

/// Two-prototype Bernoulli blobs. Each prototype spans floor(k/2) features;
/// class 0 owns [0, m), class 1 owns [m - s, 2m - s) with
/// s = round(overlap * m) shared features. Features outside a class's
/// prototype are drawn at p_out.
struct SyntheticSpec {
  Index n_per_class = 200;
  Index k = 64;
  double p_in = 0.8;
  double p_out = 0.2;
  double overlap = 0.1;
  std::uint64_t seed = 0;
};

/// Rows are class 0 first, then class 1. Deterministic given spec.seed.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace labelguard
