#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "labelguard/cnn.hpp"
#include "labelguard/dataset.hpp"
#include "labelguard/defense.hpp"
#include "labelguard/forest.hpp"
#include "labelguard/logistic.hpp"
#include "labelguard/report.hpp"
#include "labelguard/ssl.hpp"

namespace labelguard {

/// Report rows sort in this order.
enum class Method { None, Sclfa, Lsd, Csd, Kssd, Gan };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Full feature set, or the top m features ranked on the training part.
struct FeatureMode {
  std::optional<Index> top_m;

  /// "WoFS" or "WFS(m)".
  std::string label() const;
  /// Accepts "WoFS", "WFS:m" and "WFS(m)".
  static FeatureMode parse(std::string_view text);
  bool operator==(const FeatureMode&) const = default;
};

struct DatasetSource {
  /// Report id; defaults to "synthetic" or the file stem.
  std::string id;
  std::optional<SyntheticSpec> synthetic;
  /// Set when `synthetic` is empty. Relative paths resolve against the
  /// config file's directory.
  std::filesystem::path path;
  DataFormat format = DataFormat::DenseCsv;
  /// True when the synthetic seed was left out and follows the master seed.
  bool derive_synthetic_seed = false;
};

struct ScenarioConfig {
  std::string name = "experiment";
  DatasetSource dataset;
  std::vector<FeatureMode> feature_modes{FeatureMode{}};
  std::vector<Method> methods{Method::None, Method::Sclfa, Method::Lsd,
                              Method::Csd,  Method::Kssd,  Method::Gan};
  SplitRatios split;
  std::uint64_t master_seed = 0;
  int repeats = 1;
  /// When false the seconds column stays empty and reports are
  /// byte-reproducible.
  bool record_timing = true;

  // Stage seeds inside these blocks are ignored; the runner derives them.
  TrainConfig train;
  PropagationConfig propagation;
  KssdConfig kssd;
  CsdConfig csd;
  GanConfig gan;
  ForestConfig forest;
  LogisticConfig logistic;

  /// Throws ConfigError.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types are ConfigErrors.
ScenarioConfig parse_config(const nlohmann::json& j,
                            const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Stage seeds, all derived from one master seed with derive_seed(master, tag).
struct SeedSchedule {
  std::uint64_t master = 0;

  std::uint64_t synthetic() const;
  std::uint64_t split() const;
  std::uint64_t ranking() const;
  std::uint64_t attack() const;
  /// Target CNN; shared by the clean, poisoned and retrained models so rows
  /// differ only in their training labels.
  std::uint64_t target_cnn() const;
  std::uint64_t lsd_cnn() const;
  std::uint64_t csd_cnn() const;
  std::uint64_t csd_kmeans() const;
  std::uint64_t gan_ranking() const;

  /// Master seed for repeat r (r = 0 is the configured master itself).
  static SeedSchedule for_repeat(std::uint64_t master, int repeat);
};

/// Prepared data for one (repeat, feature mode): split and, for WFS, reduced
/// to the top features ranked on the training part alone.
struct PreparedData {
  DatasetSplit split;
  std::optional<FeatureRanking> ranking;
};

Dataset load_source(const DatasetSource& source, const SeedSchedule& seeds);
PreparedData prepare_data(const Dataset& ds, const ScenarioConfig& cfg,
                          const FeatureMode& mode, const SeedSchedule& seeds);

/// FNV-1a over the raw bytes of the features, labels and row ids.
std::uint64_t dataset_hash(const Dataset& ds);

/// Side observations from a run, for audits and tests.
struct RunTrace {
  struct Stage {
    int repeat = 0;
    std::string feature_mode;
    std::uint64_t test_hash_before = 0;
    std::uint64_t test_hash_after = 0;
    /// Row ids the feature ranking was fitted on (WFS only).
    std::vector<std::int64_t> ranking_rows;
    std::vector<std::int64_t> train_rows;
    std::vector<std::int64_t> test_rows;
  };
  std::vector<Stage> stages;
};

/// Runs every (feature mode, method) pair. A failing method yields a row
/// with empty metrics and the reason in `error`; other rows still run.
ExperimentReport run_experiment(const ScenarioConfig& cfg, RunTrace* trace = nullptr);

/// Target-model evaluation shared by the runner and the CLI: trains the CNN
/// on `train` with the given labels and scores it on `test`.
MetricRow evaluate_target(const Dataset& train, const Dataset& test, const TrainConfig& cfg);

}  // namespace labelguard
