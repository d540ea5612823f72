#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "labelguard/metrics.hpp"

namespace labelguard {

struct ReportRow {
  std::string dataset;
  std::string feature_mode;
  std::string method;
  MetricRow metrics;
  std::optional<std::int64_t> flips;
  std::optional<std::int64_t> restored;
  std::optional<double> seconds;
  /// Non-empty for a method whose pipeline stage failed.
  std::string error;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::string version;
  std::vector<ReportRow> rows;
};

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(std::string_view name);

inline constexpr std::array<std::string_view, 13> kReportColumns{
    "dataset", "feature_mode", "method", "acc",      "precision", "recall",  "f1",
    "fpr",     "fnr",          "auc_eq10", "flips",  "restored",  "seconds"};

/// Fixed-point rendering with 6 decimals (round-half-even on the binary value).
std::string format_fixed6(double v);

/// CSV is the bare table. JSON wraps the same rows, keyed by column name, as
/// {"environment": {"seed", "version"}, "rows": [...]}; undefined values are
/// empty cells in CSV and null in JSON. Failed rows carry an "error" key in
/// JSON only.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::ordered_json report_to_json(const ExperimentReport& report);
void write_report_json(std::ostream& out, const ExperimentReport& report);

ExperimentReport read_report_csv(std::istream& in);
ExperimentReport report_from_json(const nlohmann::ordered_json& j);

/// Throws ConfigError on an empty report and Error when the file cannot be
/// written.
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace labelguard
