#include "labelguard/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "labelguard/cluster.hpp"

namespace labelguard {

namespace {

Mask diff_mask(const Labels& a, const Labels& b) { return (a.array() != b.array()).matrix(); }

void check_validation(const Dataset& train, const Dataset& validation) {
  if (train.k() != validation.k()) {
    throw DimensionError("training and validation feature counts differ");
  }
  if (validation.count_label(0) == 0 || validation.count_label(1) == 0) {
    throw ConfigError("validation set must contain both classes");
  }
}

double summed(const Agreement& a) {
  return a.rand + a.mutual_info + a.homogeneity + a.fowlkes_mallows;
}

Labels appended(const Labels& v, int extra) {
  Labels out(v.size() + 1);
  out << v, extra;
  return out;
}

}  // namespace

void KssdConfig::validate() const {
  if (K < 1) throw ConfigError("kssd K must be >= 1");
  if (!(t >= 0.5 && t <= 1.0)) throw ConfigError("kssd t must lie in [0.5, 1]");
}

void CsdConfig::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("csd threshold must be a finite non-negative number");
  }
}

void GanConfig::validate() const {
  if (lambda_features < 1) throw ConfigError("gan lambda_features must be >= 1");
  if (!(lesslikely_fraction > 0.0 && lesslikely_fraction <= 1.0)) {
    throw ConfigError("gan lesslikely_fraction must lie in (0, 1]");
  }
  if (max_additions < 0) throw ConfigError("gan max_additions must be >= 0");
}

std::pair<int, bool> lsd_vote(int ls, int lp, int cnn, int poisoned) {
  const int ones = ls + lp + cnn + poisoned;
  if (ones == 2) return {cnn, true};
  return {ones > 2 ? 1 : 0, false};
}

DefenseResult lsd(const Dataset& train_poisoned, const Dataset& validation,
                  const PropagationConfig& ssl_cfg, const TrainConfig& cnn_cfg) {
  check_validation(train_poisoned, validation);
  ssl_cfg.validate();
  const PropagationResult ls = label_spreading(validation.features(), validation.labels(),
                                               train_poisoned.features(), ssl_cfg);
  const PropagationResult lp = label_propagation(validation.features(), validation.labels(),
                                                 train_poisoned.features(), ssl_cfg);
  const Cnn1dModel model = cnn_fit(validation, cnn_cfg);
  const Prediction cnn = cnn_predict(model, train_poisoned.features());

  DefenseResult r;
  r.method = "lsd";
  r.vote_ls = ls.labels;
  r.vote_lp = lp.labels;
  r.vote_cnn = cnn.labels;
  if (!ls.converged) r.flags.push_back("spreading reached max_iter");
  if (!lp.converged) r.flags.push_back("propagation reached max_iter");
  if (ls.unreached.any()) r.flags.push_back("rows unreachable from labeled points");

  const Labels& poisoned = train_poisoned.labels();
  r.corrected.resize(train_poisoned.n());
  r.provenance.reserve(static_cast<std::size_t>(train_poisoned.n()));
  for (Index i = 0; i < train_poisoned.n(); ++i) {
    const auto [label, tie] = lsd_vote(ls.labels(i), lp.labels(i), cnn.labels(i), poisoned(i));
    r.corrected(i) = label;
    std::string tag = tie ? "tie:cnn" : "vote";
    if (!ls.converged || !lp.converged) tag += ";maxiter";
    if (ls.unreached(i)) tag += ";unreached";
    r.provenance.push_back(std::move(tag));
  }
  r.changed = diff_mask(r.corrected, poisoned);
  return r;
}

double agreement_shift(const Labels& reference, const Labels& clusters, int label,
                       int cluster) {
  const double before = summed(agreement(reference, clusters));
  const double after = summed(agreement(appended(reference, label), appended(clusters, cluster)));
  return std::abs(after - before);
}

DefenseResult csd(const Dataset& train_poisoned, const Dataset& validation,
                  const TrainConfig& cnn_cfg, const CsdConfig& cfg) {
  check_validation(train_poisoned, validation);
  cfg.validate();
  KMeansOptions km_opts;
  km_opts.seed = cfg.seed;
  const KMeansModel km = kmeans_fit(validation.features(), km_opts);
  if (km.degenerate) {
    throw Error("csd: 2-means on the validation features left a cluster empty");
  }
  const Cnn1dModel model = cnn_fit(validation, cnn_cfg);
  const Prediction cnn = cnn_predict(model, train_poisoned.features());

  const Labels& ref = validation.labels();
  const Labels& clusters = km.assignment;
  const double baseline = summed(agreement(ref, clusters));

  DefenseResult r;
  r.method = "csd";
  r.corrected = cnn.labels;
  r.csd_scores.resize(train_poisoned.n());
  Labels ref_ext = appended(ref, 0);
  Labels clu_ext = appended(clusters, 0);
  const Index last = ref.size();
  for (Index i = 0; i < train_poisoned.n(); ++i) {
    ref_ext(last) = cnn.labels(i);
    clu_ext(last) = km.nearest(train_poisoned.features().row(i).transpose());
    const double s = std::abs(summed(agreement(ref_ext, clu_ext)) - baseline);
    r.csd_scores(i) = s;
    if (s <= cfg.threshold) {
      r.accepted_pool.push_back(train_poisoned.row_ids()[static_cast<std::size_t>(i)]);
      r.provenance.emplace_back("accepted");
    } else {
      r.provenance.emplace_back("rejected");
    }
  }
  r.changed = diff_mask(r.corrected, train_poisoned.labels());
  return r;
}

DefenseResult kssd(const Dataset& train_poisoned, const KssdConfig& cfg) {
  cfg.validate();
  if (train_poisoned.n() <= cfg.K) {
    throw ConfigError("kssd needs more rows than K (n=" + std::to_string(train_poisoned.n()) +
                      ", K=" + std::to_string(cfg.K) + ")");
  }
  const KnnIndex<double> index(train_poisoned.features());
  const Labels& poisoned = train_poisoned.labels();
  DefenseResult r;
  r.method = "kssd";
  r.corrected = poisoned;
  r.provenance.reserve(static_cast<std::size_t>(train_poisoned.n()));
  for (Index i = 0; i < train_poisoned.n(); ++i) {
    const std::vector<Index> nn = index.query_row(i, cfg.K);
    Index ones = 0;
    for (Index j : nn) ones += poisoned(j);
    const auto total = static_cast<Index>(nn.size());
    const Index zeros = total - ones;
    if (ones == zeros) {
      r.provenance.emplace_back("kept");
      continue;
    }
    const int majority = ones > zeros ? 1 : 0;
    const double fraction =
        static_cast<double>(std::max(ones, zeros)) / static_cast<double>(total);
    if (fraction >= cfg.t) {
      r.corrected(i) = majority;
      r.provenance.emplace_back("neighbors");
    } else {
      r.provenance.emplace_back("kept");
    }
  }
  r.changed = diff_mask(r.corrected, poisoned);
  return r;
}

DefenseResult gan_defense(const Dataset& train_poisoned, const FeatureRanking& ranking,
                          const GanConfig& cfg, const LogisticConfig& lr_cfg) {
  cfg.validate();
  if (ranking.importance.size() != train_poisoned.k() ||
      static_cast<Index>(ranking.order.size()) != train_poisoned.k()) {
    throw DimensionError("feature ranking does not match the training features");
  }
  const MatrixXd& x = train_poisoned.features();
  const Labels& y = train_poisoned.labels();
  DefenseResult r;
  r.method = "gan";
  const Index n_malware = train_poisoned.count_label(1);
  if (n_malware == 0) {
    r.corrected = y;
    r.changed = Mask::Constant(y.size(), false);
    r.provenance.assign(static_cast<std::size_t>(y.size()), "kept");
    r.flags.push_back("no malware-labeled rows");
    return r;
  }

  const LogisticModel model = logistic_fit(x, y, lr_cfg);
  const VectorXd scores = logistic_predict(model, x);

  std::vector<Index> malware;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 1) malware.push_back(i);
  }
  std::stable_sort(malware.begin(), malware.end(),
                   [&](Index a, Index b) { return scores(a) < scores(b); });
  const auto take = static_cast<std::size_t>(
      std::floor(cfg.lesslikely_fraction * static_cast<double>(n_malware)));
  r.lesslikely.assign(malware.begin(), malware.begin() + static_cast<std::ptrdiff_t>(take));

  // Benign prototype: features present in at least half of the benign rows.
  std::vector<Index> candidates;
  const Index n_benign = y.size() - n_malware;
  if (n_benign > 0) {
    VectorXd benign_mean = VectorXd::Zero(x.cols());
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) == 0) benign_mean += x.row(i).transpose();
    }
    benign_mean /= static_cast<double>(n_benign);
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(cfg.lambda_features),
                                           ranking.order.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (benign_mean(ranking.order[i]) >= 0.5) candidates.push_back(ranking.order[i]);
    }
  }

  MatrixXd synthetic(static_cast<Index>(r.lesslikely.size()), x.cols());
  for (std::size_t s = 0; s < r.lesslikely.size(); ++s) {
    VectorXd row = x.row(r.lesslikely[s]).transpose();
    int added = 0;
    auto next = candidates.begin();
    while (added < cfg.max_additions &&
           logistic_predict(model, row.transpose())(0) >= 0.5) {
      next = std::find_if(next, candidates.end(), [&](Index f) { return row(f) == 0.0; });
      if (next == candidates.end()) break;
      row(*next) = 1.0;
      ++added;
    }
    synthetic.row(static_cast<Index>(s)) = row.transpose();
    r.additions.push_back(added);
  }

  MatrixXd augmented_x(x.rows() + synthetic.rows(), x.cols());
  augmented_x << x, synthetic;
  Labels augmented_y(y.size() + synthetic.rows());
  augmented_y << y, Labels::Ones(synthetic.rows());
  const LogisticModel refit = logistic_fit(augmented_x, augmented_y, lr_cfg);
  const VectorXd refit_scores = logistic_predict(refit, x);
  r.corrected = (refit_scores.array() >= 0.5).cast<int>().matrix();
  r.provenance.assign(static_cast<std::size_t>(y.size()), "refit");
  r.changed = diff_mask(r.corrected, y);
  return r;
}

Index count_restored(const Labels& original, const Mask& flipped, const Labels& corrected) {
  if (original.size() != flipped.size() || original.size() != corrected.size()) {
    throw DimensionError("count_restored: lengths differ");
  }
  Index restored = 0;
  for (Index i = 0; i < original.size(); ++i) {
    if (flipped(i) && corrected(i) == original(i)) ++restored;
  }
  return restored;
}

void write_defense(std::ostream& out, const Dataset& train_poisoned,
                   const DefenseResult& result) {
  if (result.corrected.size() != train_poisoned.n()) {
    throw DimensionError("defense result does not match the training set");
  }
  out << "row_id,poisoned,corrected,changed,provenance\n";
  for (Index i = 0; i < train_poisoned.n(); ++i) {
    out << train_poisoned.row_ids()[static_cast<std::size_t>(i)] << ','
        << train_poisoned.labels()(i) << ',' << result.corrected(i) << ','
        << (result.changed(i) ? 1 : 0) << ','
        << result.provenance[static_cast<std::size_t>(i)] << '\n';
  }
}

}  // namespace labelguard
