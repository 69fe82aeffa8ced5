#include "neuboots/io/report.hpp"

#include <algorithm>

#include "neuboots/error.hpp"

namespace neuboots::io {

using nlohmann::json;

Cell cell(double v) { return v; }
Cell cell(std::optional<double> v) { return v ? Cell(*v) : Cell(std::monostate{}); }
Cell cell(std::size_t v) { return static_cast<std::int64_t>(v); }
Cell cell(int v) { return static_cast<std::int64_t>(v); }
Cell cell(std::string v) { return v; }
Cell cell(const char* v) { return std::string(v); }

MetricTable::MetricTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void MetricTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw DimensionError("table row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(row));
}

void MetricTable::append(const MetricTable& other) {
  if (other.columns_ != columns_) throw DimensionError("cannot append tables with different columns");
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

void MetricTable::sort_by(const std::string& name) {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw ConfigError("table has no column \"" + name + "\"");
  const auto c = static_cast<std::size_t>(it - columns_.begin());
  std::stable_sort(rows_.begin(), rows_.end(), [c](const auto& a, const auto& b) {
    const auto* x = std::get_if<std::int64_t>(&a[c]);
    const auto* y = std::get_if<std::int64_t>(&b[c]);
    if (!x || !y) return false;
    return *x < *y;
  });
}

namespace {

std::string to_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(V{}, c);
}

json to_json_value(const Cell& c) {
  struct V {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(double v) const { return v; }
    json operator()(std::int64_t v) const { return v; }
    json operator()(const std::string& v) const { return v; }
  };
  return std::visit(V{}, c);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

CsvTable MetricTable::to_csv() const {
  CsvTable t;
  t.header = columns_;
  for (const auto& row : rows_) {
    std::vector<std::string> out;
    out.reserve(row.size());
    for (const auto& c : row) out.push_back(to_text(c));
    t.rows.push_back(std::move(out));
  }
  return t;
}

json MetricTable::to_json() const {
  json arr = json::array();
  for (const auto& row : rows_) {
    json obj = json::object();
    for (std::size_t j = 0; j < columns_.size(); ++j) obj[columns_[j]] = to_json_value(row[j]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

void write_table_csv(const std::filesystem::path& path, const MetricTable& table) {
  write_csv(path, table.to_csv());
}

const std::vector<std::string>& calibration_columns() {
  static const std::vector<std::string> c{"error_pct", "ece_pct", "nll", "brier_x100"};
  return c;
}

const std::vector<std::string>& diversity_columns() {
  static const std::vector<std::string> c{"ratio_error", "q_statistic", "correlation", "disagreement"};
  return c;
}

const std::vector<std::string>& detection_columns() {
  static const std::vector<std::string> c{"tnr_at_tpr95", "auroc", "aupr_in", "aupr_out",
                                          "detection_accuracy"};
  return c;
}

const std::vector<std::string>& reliability_columns() {
  static const std::vector<std::string> c{"bin", "lower", "upper", "confidence_mean", "accuracy", "count"};
  return c;
}

std::vector<Cell> calibration_cells(const metrics::CalibrationReport& r) {
  return {cell(r.error_rate), cell(r.ece), cell(r.nll), cell(r.brier)};
}

std::vector<Cell> diversity_cells(const metrics::DiversityReport& r) {
  return {cell(r.ratio_error), cell(r.q_statistic), cell(r.correlation), cell(r.disagreement)};
}

std::vector<Cell> detection_cells(const metrics::DetectionMetrics& m) {
  return {cell(m.tnr_at_tpr95), cell(m.auroc), cell(m.aupr_in), cell(m.aupr_out), cell(m.detection_accuracy)};
}

json to_json(const metrics::CalibrationReport& r) {
  json bins = json::array();
  for (std::size_t b = 0; b < r.bin_stats.size(); ++b) {
    const auto& s = r.bin_stats[b];
    bins.push_back({{"bin", b},
                    {"lower", s.lower},
                    {"upper", s.upper},
                    {"confidence_mean", s.confidence_mean},
                    {"accuracy", s.accuracy},
                    {"count", s.count}});
  }
  return {{"error_pct", r.error_rate},
          {"ece_pct", r.ece},
          {"nll", r.nll},
          {"brier_x100", r.brier},
          {"reliability", std::move(bins)}};
}

json to_json(const metrics::DiversityReport& r) {
  return {{"ratio_error", optional_json(r.ratio_error)},
          {"q_statistic", optional_json(r.q_statistic)},
          {"correlation", optional_json(r.correlation)},
          {"disagreement", r.disagreement},
          {"pairs", r.pairs},
          {"ratio_error_skipped", r.ratio_error_skipped},
          {"q_statistic_skipped", r.q_statistic_skipped},
          {"correlation_skipped", r.correlation_skipped}};
}

json to_json(const metrics::DetectionMetrics& m) {
  return {{"tnr_at_tpr95", m.tnr_at_tpr95},
          {"auroc", m.auroc},
          {"aupr_in", m.aupr_in},
          {"aupr_out", m.aupr_out},
          {"detection_accuracy", m.detection_accuracy}};
}

}  // namespace neuboots::io
