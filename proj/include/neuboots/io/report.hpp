#pragma once

// Metric tables: a fixed list of named columns and typed rows, written as CSV
// (one file per table) and as JSON arrays of objects. Missing values (an
// undefined diversity statistic, say) are empty CSV cells and JSON null.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "neuboots/io/csv.hpp"
#include "neuboots/metrics/calibration.hpp"
#include "neuboots/metrics/detection.hpp"
#include "neuboots/metrics/diversity.hpp"
#include "neuboots/metrics/ood.hpp"

namespace neuboots::io {

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

Cell cell(double v);
Cell cell(std::optional<double> v);
Cell cell(std::size_t v);
Cell cell(int v);
Cell cell(std::string v);
Cell cell(const char* v);

class MetricTable {
 public:
  MetricTable() = default;
  explicit MetricTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Throws DimensionError if the row width differs from the column count.
  void add_row(std::vector<Cell> row);
  // Rows of `other` appended; columns must match.
  void append(const MetricTable& other);

  // Stable sort by the integer column `name` (used for the seed column).
  void sort_by(const std::string& name);

  CsvTable to_csv() const;
  nlohmann::json to_json() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

void write_table_csv(const std::filesystem::path& path, const MetricTable& table);

// Column names of the standard report rows, in order.
const std::vector<std::string>& calibration_columns();   // error_pct, ece_pct, nll, brier_x100
const std::vector<std::string>& diversity_columns();     // ratio_error, q_statistic, correlation, disagreement
const std::vector<std::string>& detection_columns();     // tnr_at_tpr95, auroc, aupr_in, aupr_out, detection_accuracy
const std::vector<std::string>& reliability_columns();   // bin, lower, upper, confidence_mean, accuracy, count

std::vector<Cell> calibration_cells(const metrics::CalibrationReport& r);
std::vector<Cell> diversity_cells(const metrics::DiversityReport& r);
std::vector<Cell> detection_cells(const metrics::DetectionMetrics& m);

nlohmann::json to_json(const metrics::CalibrationReport& r);
nlohmann::json to_json(const metrics::DiversityReport& r);
nlohmann::json to_json(const metrics::DetectionMetrics& m);

}  // namespace neuboots::io
