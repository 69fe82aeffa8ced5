#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neuboots/nn/dataset.hpp"

namespace neuboots::io {

// RFC 4180: comma separated, double-quoted fields may contain commas, quotes
// ("" escapes a quote) and line breaks; CRLF or LF line ends.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Shortest text that round-trips the double exactly.
std::string format_double(double v);

// Columns of a CSV dataset file.
struct CsvSchema {
  nn::TaskKind task = nn::TaskKind::classification;
  // Classification: the label column. Regression: ignored when target_columns is set.
  std::string label_column = "label";
  // Regression targets; defaults to {label_column}.
  std::vector<std::string> target_columns;
  // Feature columns; empty means every column that is not a label/target.
  std::vector<std::string> feature_columns;
  // Declared class names in index order. Empty: the sorted distinct labels.
  std::vector<std::string> classes;
};

// Throws DataError for empty files, ragged rows, unknown columns, non-numeric
// or non-finite cells (naming the 1-based data row and the column) and labels
// outside the declared classes.
nn::Dataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema);
nn::Dataset parse_csv_dataset(std::string_view text, const CsvSchema& schema);

// Feature matrix only, for prediction inputs. Uses `feature_columns` when
// given, else every column not listed in `exclude`. Same cell checks as above.
Matrix load_csv_features(const std::filesystem::path& path, const std::vector<std::string>& feature_columns,
                         const std::vector<std::string>& exclude = {});

// Header x0..x{p-1} then label (classification) or y0..y{d-1} (regression).
CsvTable dataset_to_csv(const nn::Dataset& data);

}  // namespace neuboots::io
