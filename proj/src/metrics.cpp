#include "labelguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace labelguard {

namespace {

void check_lengths(const Labels& a, const Labels& b, Index min_n = 0) {
  if (a.size() != b.size()) {
    throw DimensionError("label vectors differ in length (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < min_n) {
    throw ConfigError("need at least " + std::to_string(min_n) + " elements");
  }
}

struct Contingency {
  std::map<std::pair<int, int>, std::int64_t> joint;
  std::map<int, std::int64_t> rows;  // marginal of a
  std::map<int, std::int64_t> cols;  // marginal of b
  std::int64_t n = 0;

  Contingency(const Labels& a, const Labels& b) : n(a.size()) {
    for (Index i = 0; i < a.size(); ++i) {
      ++joint[{a(i), b(i)}];
      ++rows[a(i)];
      ++cols[b(i)];
    }
  }
};

std::int64_t pairs(std::int64_t c) { return c * (c - 1) / 2; }

template <typename Map>
std::int64_t same_cluster_pairs(const Map& counts) {
  std::int64_t s = 0;
  for (const auto& [key, c] : counts) s += pairs(c);
  return s;
}

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(const Labels& y_true, const Labels& y_pred) {
  check_lengths(y_true, y_pred);
  ConfusionMatrix cm;
  for (Index i = 0; i < y_true.size(); ++i) {
    const int t = y_true(i), p = y_pred(i);
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw ConfigError("confusion: labels must be 0 or 1");
    }
    if (t == 1) {
      (p == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (p == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricRow metric_row(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.tn < 0 || cm.fp < 0 || cm.fn < 0) {
    throw ConfigError("confusion counts must be non-negative");
  }
  if (cm.total() < 1) throw ConfigError("metric_row needs at least one sample");
  MetricRow r;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (r.precision && r.recall) {
    // Harmonic mean of precision and recall in count form.
    r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  }
  r.fpr = ratio(cm.fp, cm.fp + cm.tn);
  r.fnr = ratio(cm.fn, cm.fn + cm.tp);
  const auto specificity_term = ratio(cm.tn, cm.tn + cm.fp);
  if (r.precision && specificity_term) {
    r.auc_eq10 = 0.5 * (*r.precision + *specificity_term);
  }
  return r;
}

double rand_index(const Labels& a, const Labels& b) {
  check_lengths(a, b, 2);
  const Contingency c(a, b);
  const std::int64_t total = pairs(c.n);
  const std::int64_t both = same_cluster_pairs(c.joint);
  const std::int64_t in_a = same_cluster_pairs(c.rows);
  const std::int64_t in_b = same_cluster_pairs(c.cols);
  return static_cast<double>(total - in_a - in_b + 2 * both) / static_cast<double>(total);
}

double entropy(const Labels& a) {
  std::map<int, std::int64_t> counts;
  for (Index i = 0; i < a.size(); ++i) ++counts[a(i)];
  const auto n = static_cast<double>(a.size());
  double h = 0.0;
  for (const auto& [label, count] : counts) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double mutual_information(const Labels& a, const Labels& b) {
  check_lengths(a, b);
  if (a.size() == 0) return 0.0;
  const Contingency c(a, b);
  const auto n = static_cast<double>(c.n);
  double mi = 0.0;
  for (const auto& [key, count] : c.joint) {
    const auto nij = static_cast<double>(count);
    const auto ai = static_cast<double>(c.rows.at(key.first));
    const auto bj = static_cast<double>(c.cols.at(key.second));
    mi += nij / n * std::log2(n * nij / (ai * bj));
  }
  return std::max(0.0, mi);
}

double conditional_entropy(const Labels& a, const Labels& b) {
  check_lengths(a, b);
  if (a.size() == 0) return 0.0;
  const Contingency c(a, b);
  const auto n = static_cast<double>(c.n);
  double h = 0.0;
  for (const auto& [key, count] : c.joint) {
    const auto nij = static_cast<double>(count);
    h -= nij / n * std::log2(nij / static_cast<double>(c.cols.at(key.second)));
  }
  return std::max(0.0, h);
}

double homogeneity(const Labels& y_true, const Labels& y_pred) {
  check_lengths(y_true, y_pred);
  const double h = entropy(y_true);
  if (h == 0.0) return 1.0;
  return std::clamp(1.0 - conditional_entropy(y_true, y_pred) / h, 0.0, 1.0);
}

double fowlkes_mallows(const Labels& a, const Labels& b) {
  check_lengths(a, b, 2);
  const Contingency c(a, b);
  const std::int64_t both = same_cluster_pairs(c.joint);
  const std::int64_t in_a = same_cluster_pairs(c.rows);
  const std::int64_t in_b = same_cluster_pairs(c.cols);
  if (in_a == 0 || in_b == 0) return 0.0;
  return static_cast<double>(both) /
         std::sqrt(static_cast<double>(in_a) * static_cast<double>(in_b));
}

Agreement agreement(const Labels& reference, const Labels& clusters) {
  return Agreement{rand_index(reference, clusters), mutual_information(reference, clusters),
                   homogeneity(reference, clusters), fowlkes_mallows(reference, clusters)};
}

}  // namespace labelguard
