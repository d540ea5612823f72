#include "labelguard/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>

#include "labelguard/attack.hpp"
#include "labelguard/random.hpp"

namespace labelguard {

namespace {

using nlohmann::json;

/// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void read(const char* key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "a number");
    out = v.get<double>();
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  void read(const char* key, Int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if constexpr (std::is_same_v<Int, bool>) {
      if (!v.is_boolean()) fail(key, "true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_unsigned_v<Int>) {
      if (!v.is_number_unsigned()) fail(key, "a non-negative integer");
      out = v.get<Int>();
    } else {
      if (!v.is_number_integer()) fail(key, "an integer");
      out = v.get<Int>();
    }
  }

  void read(const char* key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError(where_ + "." + key + " must be " + what);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

SyntheticSpec parse_synthetic(const json& j, bool& seed_given) {
  ObjectReader r(j, "dataset.synthetic");
  SyntheticSpec s;
  r.read("n_per_class", s.n_per_class);
  r.read("k", s.k);
  r.read("p_in", s.p_in);
  r.read("p_out", s.p_out);
  r.read("overlap", s.overlap);
  seed_given = r.has("seed");
  r.read("seed", s.seed);
  r.finish();
  return s;
}

DatasetSource parse_source(const json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "dataset");
  DatasetSource src;
  r.read("id", src.id);
  if (r.has("synthetic") == r.has("path")) {
    throw ConfigError("dataset needs exactly one of 'synthetic' or 'path'");
  }
  if (r.has("synthetic")) {
    bool seed_given = false;
    src.synthetic = parse_synthetic(r.raw("synthetic"), seed_given);
    src.derive_synthetic_seed = !seed_given;
    if (src.id.empty()) src.id = "synthetic";
  } else {
    std::string path, format = "dense-csv";
    r.read("path", path);
    r.read("format", format);
    src.path = std::filesystem::path(path);
    if (src.path.is_relative() && !base_dir.empty()) src.path = base_dir / src.path;
    src.format = parse_data_format(format);
    if (src.id.empty()) src.id = src.path.stem().string();
  }
  r.finish();
  return src;
}

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Running totals for one report row across repeats.
struct RowTotals {
  std::array<double, 7> sums{};
  std::array<int, 7> defined{};
  std::optional<std::int64_t> flips;
  std::optional<std::int64_t> restored;
  double seconds = 0.0;
  int runs = 0;
  std::string error;

  void add(const MetricRow& m) {
    const std::array<std::optional<double>, 7> v{m.accuracy, m.precision, m.recall, m.f1,
                                                 m.fpr,      m.fnr,       m.auc_eq10};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i]) {
        sums[i] += *v[i];
        ++defined[i];
      }
    }
  }

  static void add_count(std::optional<std::int64_t>& slot, std::optional<std::int64_t> v) {
    if (v) slot = slot.value_or(0) + *v;
  }

  MetricRow mean() const {
    std::array<std::optional<double>, 7> v;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (defined[i] > 0) v[i] = sums[i] / defined[i];
    }
    return MetricRow{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct MethodOutcome {
  MetricRow metrics;
  std::optional<std::int64_t> flips;
  std::optional<std::int64_t> restored;
  double seconds = 0.0;
};

/// Runs the requested methods on one prepared split.
class ScenarioRun {
 public:
  ScenarioRun(const ScenarioConfig& cfg, const PreparedData& data, const SeedSchedule& seeds)
      : cfg_(cfg), data_(data), seeds_(seeds) {}

  MethodOutcome run(Method method) {
    const Dataset& train = data_.split.train;
    const Dataset& test = data_.split.test;
    MethodOutcome out;
    if (method == Method::None) {
      const auto start = Clock::now();
      out.metrics = evaluate_target(train, test, target_cfg());
      out.seconds = seconds_since(start);
      out.flips = 0;
      return out;
    }

    const FlipResult& flip = attack();
    const Dataset poisoned = train.with_labels(flip.poisoned_labels);
    out.flips = flip.flip_count();
    if (method == Method::Sclfa) {
      out.seconds = attack_seconds_;
      out.metrics = evaluate_target(poisoned, test, target_cfg());
      return out;
    }

    const auto start = Clock::now();
    const DefenseResult defense = defend(method, poisoned);
    out.seconds = seconds_since(start);
    out.restored = count_restored(train.labels(), flip.flip_mask, defense.corrected);
    out.metrics = evaluate_target(train.with_labels(defense.corrected), test, target_cfg());
    return out;
  }

 private:
  TrainConfig target_cfg() const {
    TrainConfig t = cfg_.train;
    t.seed = seeds_.target_cnn();
    return t;
  }

  const FlipResult& attack() {
    if (!flip_) {
      KMeansOptions opts;
      opts.seed = seeds_.attack();
      const auto start = Clock::now();
      flip_ = sclfa(data_.split.train, opts);
      attack_seconds_ = seconds_since(start);
    }
    return *flip_;
  }

  DefenseResult defend(Method method, const Dataset& poisoned) const {
    const Dataset& validation = data_.split.validation;
    switch (method) {
      case Method::Lsd: {
        TrainConfig t = cfg_.train;
        t.seed = seeds_.lsd_cnn();
        return lsd(poisoned, validation, cfg_.propagation, t);
      }
      case Method::Csd: {
        TrainConfig t = cfg_.train;
        t.seed = seeds_.csd_cnn();
        CsdConfig c = cfg_.csd;
        c.seed = seeds_.csd_kmeans();
        return csd(poisoned, validation, t, c);
      }
      case Method::Kssd:
        return kssd(poisoned, cfg_.kssd);
      case Method::Gan: {
        ForestConfig f = cfg_.forest;
        f.seed = seeds_.gan_ranking();
        return gan_defense(poisoned, rf_rank_features(poisoned, f), cfg_.gan, cfg_.logistic);
      }
      default:
        throw Error("not a defense: " + std::string(to_string(method)));
    }
  }

  const ScenarioConfig& cfg_;
  const PreparedData& data_;
  SeedSchedule seeds_;
  std::optional<FlipResult> flip_;
  double attack_seconds_ = 0.0;
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::Sclfa: return "sclfa";
    case Method::Lsd: return "lsd";
    case Method::Csd: return "csd";
    case Method::Kssd: return "kssd";
    case Method::Gan: return "gan";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::None, Method::Sclfa, Method::Lsd, Method::Csd, Method::Kssd,
                   Method::Gan}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (none, sclfa, lsd, csd, kssd, gan)");
}

std::string FeatureMode::label() const {
  return top_m ? "WFS(" + std::to_string(*top_m) + ")" : "WoFS";
}

FeatureMode FeatureMode::parse(std::string_view text) {
  if (text == "WoFS") return {};
  std::string_view digits;
  if (text.starts_with("WFS:")) {
    digits = text.substr(4);
  } else if (text.starts_with("WFS(") && text.ends_with(")")) {
    digits = text.substr(4, text.size() - 5);
  } else {
    throw ConfigError("feature mode must be WoFS, WFS:m or WFS(m), got '" + std::string(text) +
                      "'");
  }
  if (digits.empty() || digits.size() > 9 ||
      !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ConfigError("bad WFS feature count in '" + std::string(text) + "'");
  }
  return FeatureMode{static_cast<Index>(std::stoll(std::string(digits)))};
}

void ScenarioConfig::validate() const {
  if (methods.empty()) throw ConfigError("methods must not be empty");
  if (feature_modes.empty()) throw ConfigError("feature_modes must not be empty");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
    throw ConfigError("methods contain a duplicate");
  }
  std::set<std::string> labels;
  for (const FeatureMode& mode : feature_modes) {
    if (!labels.insert(mode.label()).second) {
      throw ConfigError("feature_modes contain a duplicate");
    }
    if (mode.top_m && *mode.top_m < Cnn1dModel::min_input_length()) {
      throw ConfigError("WFS needs m >= " + std::to_string(Cnn1dModel::min_input_length()) +
                        " for the CNN target, got " + std::to_string(*mode.top_m));
    }
  }
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (dataset.id.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError("dataset id must not contain commas, quotes or newlines");
  }
  if (dataset.synthetic) {
    const SyntheticSpec& s = *dataset.synthetic;
    if (s.k < Cnn1dModel::min_input_length()) {
      throw ConfigError("synthetic k must be >= " +
                        std::to_string(Cnn1dModel::min_input_length()) + " for the CNN target");
    }
    for (const FeatureMode& mode : feature_modes) {
      if (mode.top_m && *mode.top_m > s.k) {
        throw ConfigError("WFS m exceeds the synthetic feature count");
      }
    }
  } else if (dataset.path.empty()) {
    throw ConfigError("dataset path is empty");
  }
  train.validate();
  propagation.validate();
  kssd.validate();
  csd.validate();
  gan.validate();
  if (forest.n_trees < 1 || forest.max_depth < 0) {
    throw ConfigError("forest needs n_trees >= 1 and max_depth >= 0");
  }
  if (logistic.iters < 0 || !(logistic.lr > 0.0)) {
    throw ConfigError("logistic needs iters >= 0 and lr > 0");
  }
}

ScenarioConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  ObjectReader r(j, "config");
  r.read("name", cfg.name);
  if (!r.has("dataset")) throw ConfigError("config needs a 'dataset' block");
  cfg.dataset = parse_source(r.raw("dataset"), base_dir);

  if (r.has("feature_modes")) {
    const json& modes = r.raw("feature_modes");
    if (!modes.is_array()) throw ConfigError("feature_modes must be an array of strings");
    cfg.feature_modes.clear();
    for (const json& m : modes) {
      if (!m.is_string()) throw ConfigError("feature_modes must be an array of strings");
      cfg.feature_modes.push_back(FeatureMode::parse(m.get<std::string>()));
    }
  }
  if (r.has("methods")) {
    const json& methods = r.raw("methods");
    if (!methods.is_array()) throw ConfigError("methods must be an array of strings");
    cfg.methods.clear();
    for (const json& m : methods) {
      if (!m.is_string()) throw ConfigError("methods must be an array of strings");
      cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
  }
  if (r.has("split")) {
    ObjectReader s(r.raw("split"), "split");
    s.read("train", cfg.split.train);
    s.read("validation", cfg.split.validation);
    s.read("test", cfg.split.test);
    s.finish();
  }
  r.read("master_seed", cfg.master_seed);
  r.read("repeats", cfg.repeats);
  r.read("record_timing", cfg.record_timing);

  if (r.has("train")) {
    ObjectReader t(r.raw("train"), "train");
    t.read("learning_rate", cfg.train.learning_rate);
    t.read("beta1", cfg.train.beta1);
    t.read("beta2", cfg.train.beta2);
    t.read("epsilon", cfg.train.epsilon);
    t.read("epochs", cfg.train.epochs);
    t.read("batch_size", cfg.train.batch_size);
    t.finish();
  }
  if (r.has("propagation")) {
    ObjectReader p(r.raw("propagation"), "propagation");
    p.read("kernel_k", cfg.propagation.kernel_k);
    p.read("alpha", cfg.propagation.alpha);
    p.read("max_iter", cfg.propagation.max_iter);
    p.read("tol", cfg.propagation.tol);
    p.finish();
  }
  if (r.has("kssd")) {
    ObjectReader k(r.raw("kssd"), "kssd");
    k.read("K", cfg.kssd.K);
    k.read("t", cfg.kssd.t);
    k.finish();
  }
  if (r.has("csd")) {
    ObjectReader c(r.raw("csd"), "csd");
    c.read("threshold", cfg.csd.threshold);
    c.finish();
  }
  if (r.has("gan")) {
    ObjectReader g(r.raw("gan"), "gan");
    g.read("lambda_features", cfg.gan.lambda_features);
    g.read("lesslikely_fraction", cfg.gan.lesslikely_fraction);
    g.read("max_additions", cfg.gan.max_additions);
    g.finish();
  }
  if (r.has("forest")) {
    ObjectReader f(r.raw("forest"), "forest");
    f.read("n_trees", cfg.forest.n_trees);
    f.read("max_depth", cfg.forest.max_depth);
    f.finish();
  }
  if (r.has("logistic")) {
    ObjectReader l(r.raw("logistic"), "logistic");
    l.read("iters", cfg.logistic.iters);
    l.read("lr", cfg.logistic.lr);
    l.finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

std::uint64_t SeedSchedule::synthetic() const { return derive_seed(master, "synthetic"); }
std::uint64_t SeedSchedule::split() const { return derive_seed(master, "split"); }
std::uint64_t SeedSchedule::ranking() const { return derive_seed(master, "rank"); }
std::uint64_t SeedSchedule::attack() const { return derive_seed(master, "sclfa"); }
std::uint64_t SeedSchedule::target_cnn() const { return derive_seed(master, "cnn/target"); }
std::uint64_t SeedSchedule::lsd_cnn() const { return derive_seed(master, "lsd/cnn"); }
std::uint64_t SeedSchedule::csd_cnn() const { return derive_seed(master, "csd/cnn"); }
std::uint64_t SeedSchedule::csd_kmeans() const { return derive_seed(master, "csd/kmeans"); }
std::uint64_t SeedSchedule::gan_ranking() const { return derive_seed(master, "gan/rank"); }

SeedSchedule SeedSchedule::for_repeat(std::uint64_t master, int repeat) {
  if (repeat == 0) return SeedSchedule{master};
  return SeedSchedule{derive_seed(master, "repeat/" + std::to_string(repeat))};
}

Dataset load_source(const DatasetSource& source, const SeedSchedule& seeds) {
  if (source.synthetic) {
    SyntheticSpec spec = *source.synthetic;
    if (source.derive_synthetic_seed) spec.seed = seeds.synthetic();
    return generate_synthetic(spec);
  }
  return load_dataset(source.path, source.format);
}

PreparedData prepare_data(const Dataset& ds, const ScenarioConfig& cfg, const FeatureMode& mode,
                          const SeedSchedule& seeds) {
  PreparedData out{split_dataset(ds, cfg.split, seeds.split()), std::nullopt};
  if (!mode.top_m) return out;
  const Index m = *mode.top_m;
  if (m > ds.k()) {
    throw ConfigError("WFS m=" + std::to_string(m) + " exceeds k=" + std::to_string(ds.k()));
  }
  ForestConfig f = cfg.forest;
  f.seed = seeds.ranking();
  out.ranking = rf_rank_features(out.split.train, f);
  DatasetSplit& s = out.split;
  s = DatasetSplit{select_top_features(s.train, *out.ranking, m),
                   select_top_features(s.validation, *out.ranking, m),
                   select_top_features(s.test, *out.ranking, m), s.seed};
  return out;
}

std::uint64_t dataset_hash(const Dataset& ds) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv_bytes(h, ds.features().data(),
                static_cast<std::size_t>(ds.features().size()) * sizeof(double));
  h = fnv_bytes(h, ds.labels().data(), static_cast<std::size_t>(ds.labels().size()) * sizeof(int));
  h = fnv_bytes(h, ds.row_ids().data(), ds.row_ids().size() * sizeof(std::int64_t));
  return h;
}

MetricRow evaluate_target(const Dataset& train, const Dataset& test, const TrainConfig& cfg) {
  const Cnn1dModel model = cnn_fit(train, cfg);
  const Prediction pred = cnn_predict(model, test.features());
  return metric_row(confusion(test.labels(), pred.labels));
}

ExperimentReport run_experiment(const ScenarioConfig& cfg, RunTrace* trace) {
  cfg.validate();
  using Key = std::pair<Method, std::string>;
  std::map<Key, RowTotals> totals;
  for (const FeatureMode& mode : cfg.feature_modes) {
    for (Method m : cfg.methods) totals[{m, mode.label()}];
  }

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const SeedSchedule seeds = SeedSchedule::for_repeat(cfg.master_seed, rep);
    std::optional<Dataset> source;
    std::string source_error;
    try {
      source = load_source(cfg.dataset, seeds);
    } catch (const Error& e) {
      source_error = e.what();
    }
    for (const FeatureMode& mode : cfg.feature_modes) {
      std::optional<PreparedData> data;
      std::string stage_error = source_error;
      if (source) {
        try {
          data = prepare_data(*source, cfg, mode, seeds);
        } catch (const Error& e) {
          stage_error = e.what();
        }
      }
      if (!data) {
        for (Method m : cfg.methods) {
          RowTotals& t = totals[{m, mode.label()}];
          if (t.error.empty()) t.error = stage_error;
        }
        continue;
      }

      const std::uint64_t test_before = dataset_hash(data->split.test);
      ScenarioRun run(cfg, *data, seeds);
      for (Method m : cfg.methods) {
        RowTotals& t = totals[{m, mode.label()}];
        try {
          const MethodOutcome out = run.run(m);
          t.add(out.metrics);
          RowTotals::add_count(t.flips, out.flips);
          RowTotals::add_count(t.restored, out.restored);
          t.seconds += out.seconds;
          ++t.runs;
        } catch (const Error& e) {
          if (t.error.empty()) t.error = e.what();
        }
      }
      const std::uint64_t test_after = dataset_hash(data->split.test);
      if (trace) {
        RunTrace::Stage stage;
        stage.repeat = rep;
        stage.feature_mode = mode.label();
        stage.test_hash_before = test_before;
        stage.test_hash_after = test_after;
        if (data->ranking) stage.ranking_rows = data->split.train.row_ids();
        stage.train_rows = data->split.train.row_ids();
        stage.test_rows = data->split.test.row_ids();
        trace->stages.push_back(std::move(stage));
      }
      if (test_after != test_before) throw Error("test split changed during the run");
    }
  }

  ExperimentReport report;
  report.seed = cfg.master_seed;
  report.version = kVersion;
  for (const auto& [key, t] : totals) {
    ReportRow row;
    row.dataset = cfg.dataset.id;
    row.method = std::string(to_string(key.first));
    row.feature_mode = key.second;
    if (!t.error.empty()) {
      row.error = t.error;
    } else {
      row.metrics = t.mean();
      row.flips = t.flips;
      row.restored = t.restored;
      if (cfg.record_timing) row.seconds = t.seconds / std::max(1, t.runs);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace labelguard
