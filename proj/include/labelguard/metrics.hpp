#pragma once

#include <cstdint>
#include <optional>

#include "labelguard/core.hpp"

namespace labelguard {

/// Positive class is 1 (malware).
struct ConfusionMatrix {
  std::int64_t tp = 0;  // Ω
  std::int64_t tn = 0;  // χ
  std::int64_t fp = 0;  // Λ
  std::int64_t fn = 0;  // ν

  std::int64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const Labels& y_true, const Labels& y_pred);

/// Every field is a fraction in [0, 1], or empty when its denominator is 0.
struct MetricRow {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
  std::optional<double> fnr;
  /// ½(Ω/(Ω+Λ) + χ/(χ+Λ)): a confusion-matrix quantity, not a ROC integral.
  std::optional<double> auc_eq10;
};

/// Throws ConfigError on an empty matrix.
MetricRow metric_row(const ConfusionMatrix& cm);

// Partition agreement. Labels are arbitrary integer cluster ids.

/// Fraction of element pairs on which the partitions agree (together in
/// both or apart in both). Needs n >= 2.
double rand_index(const Labels& a, const Labels& b);
/// Mutual information in bits.
double mutual_information(const Labels& a, const Labels& b);
/// Shannon entropy in bits.
double entropy(const Labels& a);
/// H(a | b) in bits.
double conditional_entropy(const Labels& a, const Labels& b);
/// 1 - H(y_true | y_pred) / H(y_true); 1 when H(y_true) = 0.
double homogeneity(const Labels& y_true, const Labels& y_pred);
/// Same-cluster pair precision/recall geometric mean; 0 when either side
/// has no same-cluster pair. Needs n >= 2.
double fowlkes_mallows(const Labels& a, const Labels& b);

/// The four agreement scores between reference labels and a clustering.
/// Homogeneity treats `reference` as the truth.
struct Agreement {
  double rand = 0.0;
  double mutual_info = 0.0;
  double homogeneity = 0.0;
  double fowlkes_mallows = 0.0;
};
Agreement agreement(const Labels& reference, const Labels& clusters);

}  // namespace labelguard
