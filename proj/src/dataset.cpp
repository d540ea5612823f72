#include "labelguard/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "labelguard/random.hpp"

namespace labelguard {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_binary(std::string_view token, std::size_t line,
                 const char* what) {
  if (token == "0") return 0;
  if (token == "1") return 1;
  throw ParseError(std::string(what) + " must be 0 or 1, got '" +
                       std::string(token) + "'",
                   line);
}

Index parse_index(std::string_view token, std::size_t line) {
  if (token.empty() ||
      !std::all_of(token.begin(), token.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("bad feature id '" + std::string(token) + "'", line);
  }
  return static_cast<Index>(std::stoll(std::string(token)));
}

Dataset read_dense(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!trim(raw).empty()) break;
  }
  if (trim(raw).empty()) throw ParseError("empty file", 0);
  {
    auto header = split_on(trim(raw), ',');
    if (header.front() != "label") {
      throw ParseError("header must start with 'label'", line_no);
    }
    if (header.size() < 2) throw ParseError("header has no features", line_no);
    for (std::size_t j = 1; j < header.size(); ++j) {
      names.emplace_back(header[j]);
    }
  }
  const auto k = static_cast<Index>(names.size());
  std::vector<int> labels;
  std::vector<double> values;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split_on(line, ',');
    if (static_cast<Index>(cells.size()) != k + 1) {
      throw ParseError("expected " + std::to_string(k + 1) + " fields, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    labels.push_back(parse_binary(cells[0], line_no, "label"));
    for (Index j = 0; j < k; ++j) {
      values.push_back(parse_binary(cells[j + 1], line_no, "feature value"));
    }
  }
  if (labels.empty()) throw ParseError("no data rows", line_no);
  const auto n = static_cast<Index>(labels.size());
  MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(values.data(), n, k);
  return Dataset(std::move(x), Eigen::Map<Labels>(labels.data(), n),
                 std::move(names));
}

Dataset read_sparse(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  Index k = -1;
  std::vector<int> labels;
  std::vector<std::vector<Index>> rows;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.substr(0, 3) == "#k=") {
        if (k >= 0) throw ParseError("duplicate #k= header", line_no);
        k = parse_index(trim(line.substr(3)), line_no);
        if (k < 1) throw ParseError("#k= must be at least 1", line_no);
      }
      continue;
    }
    if (k < 0) throw ParseError("missing #k=<dim> header", line_no);
    std::istringstream tokens{std::string(line)};
    std::string token;
    tokens >> token;
    labels.push_back(parse_binary(token, line_no, "label"));
    std::vector<Index> ones;
    Index prev = -1;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected <idx>:<value>, got '" + token + "'",
                         line_no);
      }
      const Index idx = parse_index(std::string_view(token).substr(0, colon),
                                    line_no);
      const int value = parse_binary(std::string_view(token).substr(colon + 1),
                                     line_no, "feature value");
      if (idx >= k) {
        throw ParseError("unknown feature id " + std::to_string(idx) +
                             " (k=" + std::to_string(k) + ")",
                         line_no);
      }
      if (idx <= prev) {
        throw ParseError("feature ids must be strictly increasing", line_no);
      }
      prev = idx;
      if (value == 1) ones.push_back(idx);
    }
    rows.push_back(std::move(ones));
  }
  if (k < 0) throw ParseError("empty file", 0);
  if (labels.empty()) throw ParseError("no data rows", line_no);
  const auto n = static_cast<Index>(labels.size());
  MatrixXd x = MatrixXd::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j : rows[static_cast<std::size_t>(i)]) x(i, j) = 1.0;
  }
  return Dataset(std::move(x), Eigen::Map<Labels>(labels.data(), n));
}

/// Largest-remainder apportionment of `total` across classes in proportion
/// to `weights`, never exceeding `caps`.
std::vector<Index> apportion(const std::vector<Index>& weights, Index total,
                             const std::vector<Index>& caps) {
  const Index sum = std::accumulate(weights.begin(), weights.end(), Index{0});
  const std::size_t c = weights.size();
  std::vector<Index> out(c, 0);
  std::vector<double> frac(c, 0.0);
  Index assigned = 0;
  for (std::size_t i = 0; i < c; ++i) {
    const double ideal = static_cast<double>(weights[i]) *
                         static_cast<double>(total) / static_cast<double>(sum);
    out[i] = std::min(static_cast<Index>(std::floor(ideal)), caps[i]);
    frac[i] = ideal - std::floor(ideal);
    assigned += out[i];
  }
  std::vector<std::size_t> by_frac(c);
  std::iota(by_frac.begin(), by_frac.end(), std::size_t{0});
  std::stable_sort(by_frac.begin(), by_frac.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  while (assigned < total) {
    bool progressed = false;
    for (std::size_t i : by_frac) {
      if (assigned == total) break;
      if (out[i] < caps[i]) {
        ++out[i];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace

Dataset::Dataset(MatrixXd features, Labels labels,
                 std::vector<std::string> feature_names,
                 std::vector<std::int64_t> row_ids)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      names_(std::move(feature_names)),
      row_ids_(std::move(row_ids)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw ConfigError("dataset needs n >= 1 and k >= 1");
  }
  if (labels_.size() != features_.rows()) {
    throw ConfigError("label count " + std::to_string(labels_.size()) +
                      " does not match row count " +
                      std::to_string(features_.rows()));
  }
  if (!((features_.array() == 0.0) || (features_.array() == 1.0)).all()) {
    throw ConfigError("feature values must be exactly 0 or 1");
  }
  if (!((labels_.array() == 0) || (labels_.array() == 1)).all()) {
    throw ConfigError("labels must be 0 or 1");
  }
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(k()));
    for (Index j = 0; j < k(); ++j) names_.push_back("f" + std::to_string(j));
  } else if (static_cast<Index>(names_.size()) != k()) {
    throw ConfigError("feature_names length does not match k");
  }
  if (row_ids_.empty()) {
    row_ids_.resize(static_cast<std::size_t>(n()));
    std::iota(row_ids_.begin(), row_ids_.end(), std::int64_t{0});
  } else if (static_cast<Index>(row_ids_.size()) != n()) {
    throw ConfigError("row_ids length does not match n");
  }
}

Dataset Dataset::with_labels(Labels labels) const {
  return Dataset(features_, std::move(labels), names_, row_ids_);
}

Dataset Dataset::select_rows(std::span<const Index> rows) const {
  const auto m = static_cast<Index>(rows.size());
  MatrixXd x(m, k());
  Labels y(m);
  std::vector<std::int64_t> ids(rows.size());
  for (Index i = 0; i < m; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    x.row(i) = features_.row(r);
    y(i) = labels_(r);
    ids[static_cast<std::size_t>(i)] = row_ids_[static_cast<std::size_t>(r)];
  }
  return Dataset(std::move(x), std::move(y), names_, std::move(ids));
}

Dataset Dataset::select_columns(std::span<const Index> cols) const {
  const auto m = static_cast<Index>(cols.size());
  MatrixXd x(n(), m);
  std::vector<std::string> names;
  names.reserve(cols.size());
  for (Index j = 0; j < m; ++j) {
    const Index c = cols[static_cast<std::size_t>(j)];
    x.col(j) = features_.col(c);
    names.push_back(names_[static_cast<std::size_t>(c)]);
  }
  return Dataset(std::move(x), labels_, std::move(names), row_ids_);
}

DataFormat parse_data_format(std::string_view name) {
  if (name == "dense-csv" || name == "csv" || name == "dense") {
    return DataFormat::DenseCsv;
  }
  if (name == "sparse-list" || name == "sparse") return DataFormat::SparseList;
  throw ConfigError("unknown data format '" + std::string(name) +
                    "' (expected dense-csv or sparse-list)");
}

std::string_view to_string(DataFormat format) {
  return format == DataFormat::DenseCsv ? "dense-csv" : "sparse-list";
}

Dataset read_dataset(std::istream& in, DataFormat format) {
  return format == DataFormat::DenseCsv ? read_dense(in) : read_sparse(in);
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_dataset(in, format);
}

void write_dataset(std::ostream& out, const Dataset& ds, DataFormat format) {
  const auto& x = ds.features();
  if (format == DataFormat::DenseCsv) {
    out << "label";
    for (const auto& name : ds.feature_names()) out << ',' << name;
    out << '\n';
    for (Index i = 0; i < ds.n(); ++i) {
      out << ds.labels()(i);
      for (Index j = 0; j < ds.k(); ++j) out << ',' << (x(i, j) == 1.0 ? '1' : '0');
      out << '\n';
    }
    return;
  }
  out << "#k=" << ds.k() << '\n';
  for (Index i = 0; i < ds.n(); ++i) {
    out << ds.labels()(i);
    for (Index j = 0; j < ds.k(); ++j) {
      if (x(i, j) == 1.0) out << ' ' << j << ":1";
    }
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds,
                  DataFormat format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_dataset(out, ds, format);
  if (!out) throw Error("write failed for " + path.string());
}

DatasetSplit split_dataset(const Dataset& ds, const SplitRatios& ratios,
                           std::uint64_t seed) {
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const Index n = ds.n();
  if (n < 3) throw ConfigError("split needs at least 3 rows");

  const Index n_train =
      std::min<Index>(n, std::llround(ratios.train * static_cast<double>(n)));
  const Index n_val = std::min<Index>(
      n - n_train, std::llround(ratios.validation * static_cast<double>(n)));

  Rng rng(seed);
  std::array<std::vector<Index>, 2> by_class;
  for (Index i = 0; i < n; ++i) by_class[ds.labels()(i)].push_back(i);
  std::vector<Index> counts{static_cast<Index>(by_class[0].size()),
                            static_cast<Index>(by_class[1].size())};
  for (auto& members : by_class) rng.shuffle(members);

  const auto train_per_class = apportion(counts, n_train, counts);
  const std::vector<Index> room{counts[0] - train_per_class[0],
                                counts[1] - train_per_class[1]};
  const auto val_per_class = apportion(counts, n_val, room);

  std::vector<Index> train, val, test;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& members = by_class[c];
    const auto t = static_cast<std::size_t>(train_per_class[c]);
    const auto v = static_cast<std::size_t>(val_per_class[c]);
    train.insert(train.end(), members.begin(), members.begin() + t);
    val.insert(val.end(), members.begin() + t, members.begin() + t + v);
    test.insert(test.end(), members.begin() + t + v, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  if (train.empty() || val.empty() || test.empty()) {
    throw ConfigError("split produced an empty part; use more rows");
  }
  return DatasetSplit{ds.select_rows(train), ds.select_rows(val),
                      ds.select_rows(test), seed};
}

FeatureRanking make_ranking(VectorXd importance) {
  std::vector<Index> order(static_cast<std::size_t>(importance.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return importance(a) > importance(b);
  });
  return FeatureRanking{std::move(importance), std::move(order)};
}

Dataset select_top_features(const Dataset& ds, const FeatureRanking& ranking,
                            Index m) {
  if (static_cast<Index>(ranking.order.size()) != ds.k()) {
    throw DimensionError("ranking covers " +
                         std::to_string(ranking.order.size()) +
                         " features but dataset has " + std::to_string(ds.k()));
  }
  if (m < 1 || m > ds.k()) {
    throw ConfigError("top-feature count must be in [1, " +
                      std::to_string(ds.k()) + "], got " + std::to_string(m));
  }
  return ds.select_columns(
      std::span<const Index>(ranking.order.data(), static_cast<std::size_t>(m)));
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  if (!(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0)) {
    throw ConfigError("need 0 <= p_out <= p_in <= 1");
  }
  if (!(0.0 <= spec.overlap && spec.overlap <= 1.0)) {
    throw ConfigError("overlap must be in [0, 1]");
  }
  const Index m = spec.k / 2;
  if (m < 1) {
    throw ConfigError("k=" + std::to_string(spec.k) +
                      " is too small for two prototypes (need k >= 2)");
  }
  const Index shared = std::llround(spec.overlap * static_cast<double>(m));
  const Index begin1 = m - shared;

  const Index n = 2 * spec.n_per_class;
  MatrixXd x(n, spec.k);
  Labels y(n);
  Rng rng(spec.seed);
  for (Index i = 0; i < n; ++i) {
    const int cls = i < spec.n_per_class ? 0 : 1;
    const Index lo = cls == 0 ? 0 : begin1;
    const Index hi = lo + m;
    y(i) = cls;
    for (Index j = 0; j < spec.k; ++j) {
      const double p = (j >= lo && j < hi) ? spec.p_in : spec.p_out;
      x(i, j) = rng.bernoulli(p) ? 1.0 : 0.0;
    }
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace labelguard
