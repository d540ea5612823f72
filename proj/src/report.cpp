#include "labelguard/report.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "labelguard/core.hpp"

namespace labelguard {

namespace {

using ojson = nlohmann::ordered_json;

using MetricField = std::optional<double> MetricRow::*;
constexpr std::array<MetricField, 7> kMetricFields{
    &MetricRow::accuracy, &MetricRow::precision, &MetricRow::recall, &MetricRow::f1,
    &MetricRow::fpr,      &MetricRow::fnr,       &MetricRow::auc_eq10};

double rounded6(double v) { return std::stod(format_fixed6(v)); }

std::string plain_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError("report text field contains a CSV delimiter: " + s);
  }
  return s;
}

std::string cell(const std::optional<double>& v) { return v ? format_fixed6(*v) : ""; }
std::string cell(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : "";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_real(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError("malformed number '" + s + "'", line);
}

std::optional<std::int64_t> parse_count(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw ParseError("malformed count '" + s + "'", line);
}

template <typename T>
ojson to_json_value(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return rounded6(*v);
  } else {
    return *v;
  }
}

template <typename T>
std::optional<T> from_json_value(const ojson& row, const char* key) {
  if (!row.contains(key)) throw ConfigError(std::string("report row lacks '") + key + "'");
  const ojson& v = row.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ConfigError("unknown report format '" + std::string(name) + "' (csv or json)");
}

std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) {
    out << (i ? "," : "") << kReportColumns[i];
  }
  out << '\n';
  for (const ReportRow& row : report.rows) {
    out << plain_field(row.dataset) << ',' << plain_field(row.feature_mode) << ','
        << plain_field(row.method);
    for (MetricField f : kMetricFields) out << ',' << cell(row.metrics.*f);
    out << ',' << cell(row.flips) << ',' << cell(row.restored) << ',' << cell(row.seconds)
        << '\n';
  }
}

ojson report_to_json(const ExperimentReport& report) {
  ojson rows = ojson::array();
  for (const ReportRow& row : report.rows) {
    ojson r;
    r["dataset"] = row.dataset;
    r["feature_mode"] = row.feature_mode;
    r["method"] = row.method;
    for (std::size_t i = 0; i < kMetricFields.size(); ++i) {
      r[std::string(kReportColumns[3 + i])] = to_json_value(row.metrics.*kMetricFields[i]);
    }
    r["flips"] = to_json_value(row.flips);
    r["restored"] = to_json_value(row.restored);
    r["seconds"] = to_json_value(row.seconds);
    if (!row.error.empty()) r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  ojson j;
  j["environment"] = {{"seed", report.seed}, {"version", report.version}};
  j["rows"] = std::move(rows);
  return j;
}

void write_report_json(std::ostream& out, const ExperimentReport& report) {
  out << report_to_json(report).dump(2) << '\n';
}

ExperimentReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report", 0);
  const auto header = split_csv(line);
  if (header.size() != kReportColumns.size() ||
      !std::equal(header.begin(), header.end(), kReportColumns.begin())) {
    throw ParseError("unexpected report header", 1);
  }
  ExperimentReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != kReportColumns.size()) {
      throw ParseError("expected " + std::to_string(kReportColumns.size()) + " fields, got " +
                           std::to_string(f.size()),
                       lineno);
    }
    ReportRow row;
    row.dataset = f[0];
    row.feature_mode = f[1];
    row.method = f[2];
    for (std::size_t i = 0; i < kMetricFields.size(); ++i) {
      row.metrics.*kMetricFields[i] = parse_real(f[3 + i], lineno);
    }
    row.flips = parse_count(f[10], lineno);
    row.restored = parse_count(f[11], lineno);
    row.seconds = parse_real(f[12], lineno);
    report.rows.push_back(std::move(row));
  }
  return report;
}

ExperimentReport report_from_json(const ojson& j) {
  try {
    ExperimentReport report;
    if (j.contains("environment")) {
      report.seed = j.at("environment").at("seed").get<std::uint64_t>();
      report.version = j.at("environment").at("version").get<std::string>();
    }
    for (const ojson& r : j.at("rows")) {
      ReportRow row;
      row.dataset = r.at("dataset").get<std::string>();
      row.feature_mode = r.at("feature_mode").get<std::string>();
      row.method = r.at("method").get<std::string>();
      for (std::size_t i = 0; i < kMetricFields.size(); ++i) {
        row.metrics.*kMetricFields[i] =
            from_json_value<double>(r, std::string(kReportColumns[3 + i]).c_str());
      }
      row.flips = from_json_value<std::int64_t>(r, "flips");
      row.restored = from_json_value<std::int64_t>(r, "restored");
      row.seconds = from_json_value<double>(r, "seconds");
      if (r.contains("error")) row.error = r.at("error").get<std::string>();
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report JSON: ") + e.what());
  }
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  if (report.rows.empty()) throw ConfigError("refusing to write an empty report");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (format == ReportFormat::Csv) {
    write_report_csv(out, report);
  } else {
    write_report_json(out, report);
  }
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace labelguard
