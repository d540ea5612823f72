#include "labelguard/attack.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace labelguard {

namespace {

FlipResult no_flips(const Dataset& train, KMeansModel kmeans) {
  FlipResult r;
  r.poisoned_labels = train.labels();
  r.flip_mask = Mask::Constant(train.n(), false);
  r.sv = VectorXd::Zero(train.n());
  r.kmeans = std::move(kmeans);
  r.degenerate = true;
  return r;
}

FlipResult flip_by_silhouette(const Dataset& train, KMeansModel kmeans) {
  const std::set<int> used(kmeans.assignment.begin(), kmeans.assignment.end());
  if (kmeans.degenerate || used.size() < 2) return no_flips(train, std::move(kmeans));
  FlipResult r;
  r.sv = silhouette_values(train.features(), kmeans.assignment);
  r.flip_mask = (r.sv.array() <= 0.0).matrix();
  r.poisoned_labels = apply_flip(train.labels(), r.flip_mask);
  r.kmeans = std::move(kmeans);
  return r;
}

}  // namespace

Labels apply_flip(const Labels& labels, const Mask& mask) {
  if (labels.size() != mask.size()) {
    throw DimensionError("flip mask length does not match labels");
  }
  Labels out = labels;
  for (Index i = 0; i < out.size(); ++i) {
    if (mask(i)) out(i) = 1 - out(i);
  }
  return out;
}

FlipResult sclfa(const Dataset& train, const KMeansOptions& options) {
  if (train.n() < 2) throw ConfigError("the attack needs at least 2 training rows");
  KMeansOptions opts = options;
  opts.n_clusters = 2;
  return flip_by_silhouette(train, kmeans_fit(train.features(), opts));
}

FlipResult sclfa_from_assignment(const Dataset& train, const Labels& assignment) {
  if (assignment.size() != train.n()) {
    throw DimensionError("assignment length does not match training rows");
  }
  KMeansModel km;
  km.assignment = assignment;
  const std::set<int> used(assignment.begin(), assignment.end());
  km.degenerate = used.size() < 2;
  return flip_by_silhouette(train, std::move(km));
}

void write_flips(std::ostream& out, const Dataset& train, const FlipResult& flips) {
  if (flips.flip_mask.size() != train.n()) {
    throw DimensionError("flip result does not match the training set");
  }
  out << "row_id,sv,flipped\n";
  char buf[64];
  for (Index i = 0; i < train.n(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", flips.sv(i));
    out << train.row_ids()[static_cast<std::size_t>(i)] << ',' << buf << ','
        << (flips.flip_mask(i) ? 1 : 0) << '\n';
  }
}

FlipRecord read_flips(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty flip file", 0);
  if (line != "row_id,sv,flipped") throw ParseError("expected header row_id,sv,flipped", 1);
  std::vector<std::int64_t> ids;
  std::vector<double> sv;
  std::vector<bool> flipped;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, s, f, extra;
    if (!std::getline(ss, id, ',') || !std::getline(ss, s, ',') || !std::getline(ss, f, ',') ||
        std::getline(ss, extra, ',')) {
      throw ParseError("expected 3 fields", lineno);
    }
    if (f != "0" && f != "1") throw ParseError("flipped must be 0 or 1", lineno);
    try {
      std::size_t used = 0;
      ids.push_back(std::stoll(id, &used));
      if (used != id.size()) throw std::invalid_argument(id);
      sv.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", lineno);
    }
    flipped.push_back(f == "1");
  }
  FlipRecord r;
  r.row_ids = std::move(ids);
  r.sv = Eigen::Map<const VectorXd>(sv.data(), static_cast<Index>(sv.size()));
  r.flipped.resize(static_cast<Index>(flipped.size()));
  for (std::size_t i = 0; i < flipped.size(); ++i) r.flipped(static_cast<Index>(i)) = flipped[i];
  return r;
}

}  // namespace labelguard
