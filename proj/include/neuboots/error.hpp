#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace neuboots {

// Base for every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape disagreement between an input and a layer (or two buffers).
class DimensionError : public Error {
 public:
  DimensionError(std::string what, std::optional<std::size_t> layer = std::nullopt)
      : Error(std::move(what)), layer_(layer) {}
  std::optional<std::size_t> layer() const noexcept { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

// Non-finite loss or parameters. Carries where it happened.
class NumericalError : public Error {
 public:
  struct Where {
    std::optional<std::size_t> epoch;
    std::optional<std::size_t> step;
    std::optional<std::size_t> member;
    std::optional<std::size_t> replication;
    std::vector<std::size_t> batch_indices;
  };

  NumericalError(std::string what, Where where) : Error(std::move(what)), where_(std::move(where)) {}
  const Where& where() const noexcept { return where_; }

 private:
  Where where_;
};

// Malformed or invalid input data (CSV, datasets, model files).
class DataError : public Error {
 public:
  DataError(std::string what, std::optional<std::size_t> row = std::nullopt,
            std::optional<std::string> column = std::nullopt)
      : Error(std::move(what)), row_(row), column_(std::move(column)) {}
  std::optional<std::size_t> row() const noexcept { return row_; }
  const std::optional<std::string>& column() const noexcept { return column_; }

 private:
  std::optional<std::size_t> row_;
  std::optional<std::string> column_;
};

// Invalid configuration values or unknown names.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace neuboots
