#pragma once

// Brute-force reference implementations used only by tests. Each one follows
// the textbook definition directly and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Ints = std::vector<int>;

inline double dist(const Mat& x, long i, long j) {
  double s = 0.0;
  for (long c = 0; c < x.cols(); ++c) {
    const double d = x(i, c) - x(j, c);
    s += d * d;
  }
  return std::sqrt(s);
}

/// O(n^2) silhouette straight from the definition.
inline std::vector<double> silhouette(const Mat& x, const Ints& cluster) {
  const long n = x.rows();
  std::set<int> ids(cluster.begin(), cluster.end());
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (long i = 0; i < n; ++i) {
    const int own = cluster[static_cast<std::size_t>(i)];
    double a_sum = 0.0;
    int a_cnt = 0;
    for (long j = 0; j < n; ++j) {
      if (j != i && cluster[static_cast<std::size_t>(j)] == own) {
        a_sum += dist(x, i, j);
        ++a_cnt;
      }
    }
    if (a_cnt == 0) continue;
    const double a = a_sum / a_cnt;
    double b = std::numeric_limits<double>::infinity();
    for (int other : ids) {
      if (other == own) continue;
      double s = 0.0;
      int c = 0;
      for (long j = 0; j < n; ++j) {
        if (cluster[static_cast<std::size_t>(j)] == other) {
          s += dist(x, i, j);
          ++c;
        }
      }
      b = std::min(b, s / c);
    }
    const double m = std::max(a, b);
    out[static_cast<std::size_t>(i)] = m > 0 ? (b - a) / m : 0.0;
  }
  return out;
}

struct PairCounts {
  long both = 0, only_a = 0, only_b = 0, neither = 0;
};

/// Enumerates every unordered pair.
inline PairCounts pair_counts(const Ints& a, const Ints& b) {
  PairCounts pc;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++pc.both;
      else if (sa) ++pc.only_a;
      else if (sb) ++pc.only_b;
      else ++pc.neither;
    }
  }
  return pc;
}

inline double rand_index(const Ints& a, const Ints& b) {
  const PairCounts pc = pair_counts(a, b);
  return double(pc.both + pc.neither) / double(pc.both + pc.only_a + pc.only_b + pc.neither);
}

inline double fowlkes_mallows(const Ints& a, const Ints& b) {
  const PairCounts pc = pair_counts(a, b);
  const double d = double(pc.both + pc.only_a) * double(pc.both + pc.only_b);
  return d > 0 ? pc.both / std::sqrt(d) : 0.0;
}

/// Probability tables built by counting, then entropies in bits.
inline double entropy_bits(const Ints& a) {
  std::map<int, double> p;
  for (int v : a) p[v] += 1.0 / a.size();
  double h = 0.0;
  for (auto& [k, q] : p) h -= q * std::log2(q);
  return h;
}

inline double joint_entropy_bits(const Ints& a, const Ints& b) {
  std::map<std::pair<int, int>, double> p;
  for (std::size_t i = 0; i < a.size(); ++i) p[{a[i], b[i]}] += 1.0 / a.size();
  double h = 0.0;
  for (auto& [k, q] : p) h -= q * std::log2(q);
  return h;
}

/// I(a; b) = H(a) + H(b) - H(a, b).
inline double mutual_information(const Ints& a, const Ints& b) {
  return entropy_bits(a) + entropy_bits(b) - joint_entropy_bits(a, b);
}

/// 1 - H(t | p) / H(t), with H(t | p) = H(t, p) - H(p).
inline double homogeneity(const Ints& t, const Ints& p) {
  const double ht = entropy_bits(t);
  if (ht == 0.0) return 1.0;
  return 1.0 - (joint_entropy_bits(t, p) - entropy_bits(p)) / ht;
}

/// Indices sorted by (distance, index), self optionally excluded.
inline std::vector<long> knn(const Mat& pts, const Vec& q, long K, long exclude = -1) {
  std::vector<std::pair<double, long>> all;
  for (long i = 0; i < pts.rows(); ++i) {
    if (i == exclude) continue;
    double s = 0.0;
    for (long c = 0; c < pts.cols(); ++c) s += (pts(i, c) - q(c)) * (pts(i, c) - q(c));
    all.push_back({std::sqrt(s), i});
  }
  std::sort(all.begin(), all.end());
  std::vector<long> out;
  for (long i = 0; i < std::min<long>(K, static_cast<long>(all.size())); ++i) {
    out.push_back(all[static_cast<std::size_t>(i)].second);
  }
  return out;
}

/// Expected KSSD output for one row.
inline int kssd_row(const Mat& x, const Ints& labels, long i, long K, double t) {
  const auto nn = knn(x, x.row(i).transpose(), K, i);
  int ones = 0;
  for (long j : nn) ones += labels[static_cast<std::size_t>(j)];
  const int zeros = static_cast<int>(nn.size()) - ones;
  if (ones == zeros) return labels[static_cast<std::size_t>(i)];
  const double frac = double(std::max(ones, zeros)) / nn.size();
  return frac >= t ? (ones > zeros ? 1 : 0) : labels[static_cast<std::size_t>(i)];
}

/// Central finite-difference gradient.
template <typename F>
Vec numeric_gradient(F&& f, const Vec& at, double h = 1e-4) {
  Vec g(at.size());
  Vec p = at;
  for (long i = 0; i < at.size(); ++i) {
    const double orig = p(i);
    p(i) = orig + h;
    const double up = f(p);
    p(i) = orig - h;
    const double down = f(p);
    p(i) = orig;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

/// Gradient check that tolerates kinks (max-pool switches). A coordinate
/// whose central difference at h disagrees with the one at h/10 straddles a
/// kink inside the stencil; those are compared at h/100 instead.
struct KinkAwareCheck {
  double smooth_error = 0.0;
  double kink_error = 0.0;
  long kinks = 0;
  long checked = 0;
};

template <typename F>
KinkAwareCheck kink_aware_check(F&& f, const Vec& at, const Vec& analytic, double h = 1e-4,
                                double tol = 1e-4, double floor = 1e-6) {
  auto central = [&](Vec& p, long i, double step) {
    const double orig = p(i);
    p(i) = orig + step;
    const double up = f(p);
    p(i) = orig - step;
    const double down = f(p);
    p(i) = orig;
    return (up - down) / (2 * step);
  };
  auto rel = [&](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
  };
  KinkAwareCheck out;
  Vec p = at;
  for (long i = 0; i < at.size(); ++i) {
    const double coarse = central(p, i, h);
    const double fine = central(p, i, h / 10);
    ++out.checked;
    if (rel(coarse, fine) > tol) {
      ++out.kinks;
      out.kink_error = std::max(out.kink_error, rel(analytic(i), central(p, i, h / 100)));
    } else {
      out.smooth_error = std::max(out.smooth_error, rel(analytic(i), coarse));
    }
  }
  return out;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const Vec& a, const Vec& b, double floor = 1e-6) {
  double worst = 0.0;
  for (long i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / scale);
  }
  return worst;
}

/// Random binary matrix with per-class Bernoulli rates: class 0 rows draw
/// every feature at p0, class 1 rows at p1. Unequal rates give the two
/// clusters different spreads.
inline std::pair<Mat, std::vector<int>> asymmetric_blobs(long n_per_class, long k, double p0,
                                                         double p1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [](std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; };
  Mat x(2 * n_per_class, k);
  std::vector<int> y(static_cast<std::size_t>(2 * n_per_class));
  for (long i = 0; i < 2 * n_per_class; ++i) {
    const int cls = i < n_per_class ? 0 : 1;
    y[static_cast<std::size_t>(i)] = cls;
    for (long c = 0; c < k; ++c) x(i, c) = u(rng) < (cls == 0 ? p0 : p1) ? 1.0 : 0.0;
  }
  return {x, y};
}

}  // namespace oracle
