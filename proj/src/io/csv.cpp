#include "neuboots/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "neuboots/error.hpp"

namespace neuboots::io {

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field is a blank line.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw DataError("stray quote inside unquoted field on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        ++line;
        end_record();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();

  if (records.empty()) throw DataError("CSV input is empty");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                          " fields but the header has " + std::to_string(table.header.size()),
                      r);
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

namespace {

void write_field(std::ostream& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      write_field(out, row[j]);
    }
    out << "\r\n";
  };
  write_row(table.header);
  for (const auto& r : table.rows) write_row(r);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, table);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  std::string_view s(cell);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("row " + std::to_string(row) + ", column \"" + column + "\": '" + cell +
                        "' is not a number",
                    row, column);
  }
  if (!std::isfinite(v)) {
    throw DataError("row " + std::to_string(row) + ", column \"" + column + "\": non-finite value '" +
                        cell + "'",
                    row, column);
  }
  return v;
}

std::size_t require_column(const CsvTable& t, const std::string& name) {
  const auto c = t.column(name);
  if (!c) throw DataError("CSV has no column \"" + name + "\"", std::nullopt, name);
  return *c;
}

}  // namespace

nn::Dataset parse_csv_dataset(std::string_view text, const CsvSchema& schema) {
  const CsvTable t = parse_csv(text);
  if (t.rows.empty()) throw DataError("CSV has a header but no data rows");

  std::vector<std::string> targets = schema.target_columns;
  if (targets.empty()) targets.push_back(schema.label_column);
  if (schema.task == nn::TaskKind::classification) targets = {schema.label_column};
  std::vector<std::size_t> target_idx;
  for (const auto& name : targets) target_idx.push_back(require_column(t, name));

  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (std::find(target_idx.begin(), target_idx.end(), j) == target_idx.end()) feature_idx.push_back(j);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_idx.push_back(require_column(t, name));
  }
  if (feature_idx.empty()) throw DataError("CSV has no feature columns");

  const std::size_t n = t.rows.size();
  Matrix x(n, feature_idx.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      x(r, j) = parse_cell(t.rows[r][feature_idx[j]], r + 1, t.header[feature_idx[j]]);
    }
  }

  if (schema.task == nn::TaskKind::regression) {
    Matrix y(n, target_idx.size());
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < target_idx.size(); ++j) {
        y(r, j) = parse_cell(t.rows[r][target_idx[j]], r + 1, t.header[target_idx[j]]);
      }
    }
    return nn::Dataset::regression(std::move(x), std::move(y));
  }

  std::vector<std::string> classes = schema.classes;
  const std::size_t label_col = target_idx.front();
  if (classes.empty()) {
    std::set<std::string> seen;
    for (const auto& row : t.rows) seen.insert(row[label_col]);
    classes.assign(seen.begin(), seen.end());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], c);
  std::vector<std::size_t> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto it = index.find(t.rows[r][label_col]);
    if (it == index.end()) {
      throw DataError("row " + std::to_string(r + 1) + ", column \"" + t.header[label_col] +
                          "\": unknown class label '" + t.rows[r][label_col] + "'",
                      r + 1, t.header[label_col]);
    }
    labels[r] = it->second;
  }
  if (classes.size() < 2) throw DataError("classification data needs at least two classes");
  return nn::Dataset::classification(std::move(x), std::move(labels), classes.size());
}

nn::Dataset load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_dataset(buf.str(), schema);
}

Matrix load_csv_features(const std::filesystem::path& path, const std::vector<std::string>& feature_columns,
                         const std::vector<std::string>& exclude) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError("CSV has a header but no data rows");
  std::vector<std::size_t> cols;
  if (!feature_columns.empty()) {
    for (const auto& name : feature_columns) cols.push_back(require_column(t, name));
  } else {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (std::find(exclude.begin(), exclude.end(), t.header[j]) == exclude.end()) cols.push_back(j);
    }
  }
  if (cols.empty()) throw DataError("CSV has no feature columns");
  Matrix x(t.rows.size(), cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) x(r, j) = parse_cell(t.rows[r][cols[j]], r + 1, t.header[cols[j]]);
  }
  return x;
}

CsvTable dataset_to_csv(const nn::Dataset& data) {
  CsvTable t;
  for (std::size_t j = 0; j < data.feature_dim(); ++j) t.header.push_back("x" + std::to_string(j));
  if (data.is_classification()) {
    t.header.push_back("label");
  } else {
    for (std::size_t j = 0; j < data.targets().cols(); ++j) t.header.push_back("y" + std::to_string(j));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> row;
    for (double v : data.x().row(i)) row.push_back(format_double(v));
    if (data.is_classification()) {
      row.push_back(std::to_string(data.labels()[i]));
    } else {
      for (double v : data.targets().row(i)) row.push_back(format_double(v));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace neuboots::io
