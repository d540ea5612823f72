#include "labelguard/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "labelguard/attack.hpp"
#include "labelguard/dataset.hpp"
#include "labelguard/defense.hpp"
#include "labelguard/forest.hpp"
#include "labelguard/harness.hpp"
#include "labelguard/report.hpp"

namespace labelguard {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

void close_checked(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("failed writing " + path);
}

struct RunArgs {
  std::string config, out, format = "csv";
  int repeats = 0;
  bool no_timing = false;
};

struct RankArgs {
  std::string data, data_format = "dense-csv", out;
  std::uint64_t seed = 0;
  int trees = ForestConfig{}.n_trees;
  int depth = ForestConfig{}.max_depth;
};

struct SynthArgs {
  std::string out, data_format = "dense-csv";
  SyntheticSpec spec;
};

struct SplitArgs {
  std::string data, data_format = "dense-csv", config;
  std::string out_train, out_validation, out_test;
  std::optional<std::uint64_t> master_seed;
  std::string feature_mode = "WoFS";
};

struct PoisonArgs {
  std::string data, data_format = "dense-csv", out, out_data;
  std::optional<std::uint64_t> seed, master_seed;
};

struct DefendArgs {
  std::string method, data, validation, test, data_format = "dense-csv";
  std::string out, flips, report, config;
  std::string dataset_id = "synthetic", feature_mode = "WoFS";
  std::optional<std::uint64_t> master_seed;
};

/// Config blocks for single-stage commands: the bundled defaults unless a
/// config file is given.
ScenarioConfig stage_config(const std::string& path) {
  if (path.empty()) {
    ScenarioConfig cfg;
    cfg.dataset.synthetic = SyntheticSpec{};
    cfg.dataset.id = "synthetic";
    return cfg;
  }
  return load_config(path);
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  ScenarioConfig cfg = load_config(a.config);
  if (a.repeats > 0) cfg.repeats = a.repeats;
  if (a.no_timing) cfg.record_timing = false;
  const ReportFormat format = parse_report_format(a.format);
  const ExperimentReport report = run_experiment(cfg);
  emit_report(report, format, a.out);
  int failed = 0;
  for (const ReportRow& row : report.rows) {
    if (!row.error.empty()) {
      out << "failed: " << row.method << ' ' << row.feature_mode << ": " << row.error << '\n';
      ++failed;
    }
  }
  out << "wrote " << report.rows.size() << " rows to " << a.out << '\n';
  return failed ? 2 : 0;
}

int cmd_rank(const RankArgs& a) {
  const Dataset ds = load_dataset(a.data, parse_data_format(a.data_format));
  const FeatureRanking ranking = rf_rank_features(ds, ForestConfig{a.trees, a.depth, a.seed});
  std::ofstream f = open_out(a.out);
  f << "rank,feature,name,importance\n";
  char buf[64];
  for (std::size_t i = 0; i < ranking.order.size(); ++i) {
    const Index c = ranking.order[i];
    std::snprintf(buf, sizeof buf, "%.17g", ranking.importance(c));
    f << i << ',' << c << ',' << ds.feature_names()[static_cast<std::size_t>(c)] << ',' << buf
      << '\n';
  }
  close_checked(f, a.out);
  return 0;
}

int cmd_synth(const SynthArgs& a) {
  save_dataset(a.out, generate_synthetic(a.spec), parse_data_format(a.data_format));
  return 0;
}

int cmd_split(const SplitArgs& a) {
  ScenarioConfig cfg = stage_config(a.config);
  if (a.master_seed) cfg.master_seed = *a.master_seed;
  const DataFormat format = parse_data_format(a.data_format);
  const Dataset ds = load_dataset(a.data, format);
  const PreparedData data =
      prepare_data(ds, cfg, FeatureMode::parse(a.feature_mode), SeedSchedule{cfg.master_seed});
  save_dataset(a.out_train, data.split.train, format);
  save_dataset(a.out_validation, data.split.validation, format);
  save_dataset(a.out_test, data.split.test, format);
  return 0;
}

int cmd_poison(const PoisonArgs& a) {
  const DataFormat format = parse_data_format(a.data_format);
  const Dataset train = load_dataset(a.data, format);
  KMeansOptions opts;
  opts.seed = a.seed ? *a.seed : SeedSchedule{a.master_seed.value_or(0)}.attack();
  const FlipResult flips = sclfa(train, opts);
  std::ofstream f = open_out(a.out);
  write_flips(f, train, flips);
  close_checked(f, a.out);
  if (!a.out_data.empty()) save_dataset(a.out_data, train.with_labels(flips.poisoned_labels), format);
  return 0;
}

int cmd_defend(const DefendArgs& a, std::ostream& out) {
  ScenarioConfig cfg = stage_config(a.config);
  if (a.master_seed) cfg.master_seed = *a.master_seed;
  const SeedSchedule seeds{cfg.master_seed};
  const Method method = parse_method(a.method);
  if (method == Method::None || method == Method::Sclfa) {
    throw ConfigError("defend needs one of lsd, csd, kssd, gan");
  }
  const DataFormat format = parse_data_format(a.data_format);
  const Dataset poisoned = load_dataset(a.data, format);
  const bool needs_validation = method == Method::Lsd || method == Method::Csd;
  if (needs_validation && a.validation.empty()) {
    throw ConfigError("--validation is required for " + a.method);
  }

  DefenseResult result;
  switch (method) {
    case Method::Lsd: {
      TrainConfig t = cfg.train;
      t.seed = seeds.lsd_cnn();
      result = lsd(poisoned, load_dataset(a.validation, format), cfg.propagation, t);
      break;
    }
    case Method::Csd: {
      TrainConfig t = cfg.train;
      t.seed = seeds.csd_cnn();
      CsdConfig c = cfg.csd;
      c.seed = seeds.csd_kmeans();
      result = csd(poisoned, load_dataset(a.validation, format), t, c);
      break;
    }
    case Method::Kssd:
      result = kssd(poisoned, cfg.kssd);
      break;
    default: {
      ForestConfig f = cfg.forest;
      f.seed = seeds.gan_ranking();
      result = gan_defense(poisoned, rf_rank_features(poisoned, f), cfg.gan, cfg.logistic);
      break;
    }
  }
  std::ofstream f = open_out(a.out);
  write_defense(f, poisoned, result);
  close_checked(f, a.out);
  for (const std::string& flag : result.flags) out << "note: " << flag << '\n';

  std::optional<std::int64_t> flip_count, restored;
  if (!a.flips.empty()) {
    std::ifstream in = open_in(a.flips);
    const FlipRecord rec = read_flips(in);
    if (rec.row_ids != poisoned.row_ids()) {
      throw ConfigError("flip file rows do not match the training rows");
    }
    // Flipped rows held 1 - poisoned before the attack.
    const Labels original = apply_flip(poisoned.labels(), rec.flipped);
    flip_count = rec.flipped.count();
    restored = count_restored(original, rec.flipped, result.corrected);
    out << "restored " << *restored << " of " << *flip_count << " flipped labels\n";
  }

  if (!a.report.empty()) {
    if (a.test.empty()) throw ConfigError("--report needs --test");
    TrainConfig t = cfg.train;
    t.seed = seeds.target_cnn();
    ExperimentReport report;
    report.seed = cfg.master_seed;
    report.version = kVersion;
    ReportRow row;
    row.dataset = a.dataset_id;
    row.feature_mode = FeatureMode::parse(a.feature_mode).label();
    row.method = a.method;
    row.metrics = evaluate_target(poisoned.with_labels(result.corrected),
                                  load_dataset(a.test, format), t);
    row.flips = flip_count;
    row.restored = restored;
    report.rows.push_back(std::move(row));
    emit_report(report, ReportFormat::Csv, a.report);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-flipping attack and defense toolkit", "labelguard"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", kVersion);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write its report");
  run_cmd->add_option("--config", run.config, "Scenario config (JSON)")->required();
  run_cmd->add_option("--out", run.out, "Report path")->required();
  run_cmd->add_option("--format", run.format, "csv or json")->capture_default_str();
  run_cmd->add_option("--repeats", run.repeats, "Override the config's repeat count");
  run_cmd->add_flag("--no-timing", run.no_timing, "Leave the seconds column empty");

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank features by forest importance");
  rank_cmd->add_option("--data", rank.data, "Input dataset")->required();
  rank_cmd->add_option("--data-format", rank.data_format, "dense-csv or sparse-list")
      ->capture_default_str();
  rank_cmd->add_option("--out", rank.out, "Ranking CSV")->required();
  rank_cmd->add_option("--seed", rank.seed)->capture_default_str();
  rank_cmd->add_option("--trees", rank.trees)->capture_default_str();
  rank_cmd->add_option("--depth", rank.depth)->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic two-prototype dataset");
  synth_cmd->add_option("--out", synth.out, "Output dataset")->required();
  synth_cmd->add_option("--data-format", synth.data_format)->capture_default_str();
  synth_cmd->add_option("--n-per-class", synth.spec.n_per_class)->capture_default_str();
  synth_cmd->add_option("--k", synth.spec.k)->capture_default_str();
  synth_cmd->add_option("--p-in", synth.spec.p_in)->capture_default_str();
  synth_cmd->add_option("--p-out", synth.spec.p_out)->capture_default_str();
  synth_cmd->add_option("--overlap", synth.spec.overlap)->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.seed)->capture_default_str();

  SplitArgs split;
  auto* split_cmd =
      app.add_subcommand("split", "Split a dataset the way the experiment runner does");
  split_cmd->add_option("--data", split.data)->required();
  split_cmd->add_option("--data-format", split.data_format)->capture_default_str();
  split_cmd->add_option("--config", split.config, "Take ratios and seeds from a config");
  split_cmd->add_option("--master-seed", split.master_seed);
  split_cmd->add_option("--feature-mode", split.feature_mode, "WoFS or WFS:m")
      ->capture_default_str();
  split_cmd->add_option("--out-train", split.out_train)->required();
  split_cmd->add_option("--out-validation", split.out_validation)->required();
  split_cmd->add_option("--out-test", split.out_test)->required();

  PoisonArgs poison;
  auto* poison_cmd = app.add_subcommand("poison", "Apply the silhouette label flip");
  poison_cmd->add_option("--data", poison.data, "Training set")->required();
  poison_cmd->add_option("--data-format", poison.data_format)->capture_default_str();
  poison_cmd->add_option("--out", poison.out, "Flip CSV (row_id,sv,flipped)")->required();
  poison_cmd->add_option("--out-data", poison.out_data, "Poisoned training set");
  auto* seed_opt = poison_cmd->add_option("--seed", poison.seed, "k-means seed");
  poison_cmd->add_option("--master-seed", poison.master_seed, "Derive the seed as the runner does")
      ->excludes(seed_opt);

  DefendArgs defend;
  auto* defend_cmd = app.add_subcommand("defend", "Correct poisoned labels with one defense");
  defend_cmd->add_option("--method", defend.method, "lsd, csd, kssd or gan")->required();
  defend_cmd->add_option("--data", defend.data, "Poisoned training set")->required();
  defend_cmd->add_option("--validation", defend.validation, "Clean validation set");
  defend_cmd->add_option("--data-format", defend.data_format)->capture_default_str();
  defend_cmd->add_option("--out", defend.out, "Defense CSV")->required();
  defend_cmd->add_option("--config", defend.config, "Take model settings from a config");
  defend_cmd->add_option("--master-seed", defend.master_seed);
  defend_cmd->add_option("--flips", defend.flips, "Flip CSV, to count restored labels");
  defend_cmd->add_option("--test", defend.test, "Test set for --report");
  defend_cmd->add_option("--report", defend.report, "Retrain the target and write a report row");
  defend_cmd->add_option("--dataset-id", defend.dataset_id)->capture_default_str();
  defend_cmd->add_option("--feature-mode", defend.feature_mode)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*rank_cmd) return cmd_rank(rank);
    if (*synth_cmd) return cmd_synth(synth);
    if (*split_cmd) return cmd_split(split);
    if (*poison_cmd) return cmd_poison(poison);
    if (*defend_cmd) return cmd_defend(defend, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace labelguard
