#include "neuboots/nn/dataset.hpp"

#include <cmath>
#include <string>

#include "neuboots/error.hpp"

namespace neuboots::nn {

std::size_t target_count(const Targets& y) {
  return std::visit(
      [](const auto& t) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Matrix>) {
          return t.rows();
        } else {
          return t.size();
        }
      },
      y);
}

Targets select_targets(const Targets& y, std::span<const std::size_t> indices) {
  if (const auto* m = std::get_if<Matrix>(&y)) return m->select_rows(indices);
  const auto& labels = std::get<std::vector<std::size_t>>(y);
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels[i]);
  return out;
}

Dataset::Dataset(Matrix x, Targets y, TaskKind task, std::size_t num_classes)
    : x_(std::move(x)), y_(std::move(y)), task_(task), num_classes_(num_classes) {
  if (x_.rows() == 0) throw DataError("dataset must contain at least one sample");
  if (target_count(y_) != x_.rows()) {
    throw DimensionError("dataset has " + std::to_string(x_.rows()) + " feature rows but " +
                         std::to_string(target_count(y_)) + " targets");
  }
  for (std::size_t r = 0; r < x_.rows(); ++r) {
    for (std::size_t c = 0; c < x_.cols(); ++c) {
      if (!std::isfinite(x_(r, c))) {
        throw DataError("non-finite feature value at row " + std::to_string(r) + ", column " +
                            std::to_string(c),
                        r);
      }
    }
  }
}

Dataset Dataset::regression(Matrix x, Matrix y) {
  for (double v : y.flat()) {
    if (!std::isfinite(v)) throw DataError("non-finite regression target");
  }
  return Dataset(std::move(x), std::move(y), TaskKind::regression, 0);
}

Dataset Dataset::classification(Matrix x, std::vector<std::size_t> labels, std::size_t num_classes) {
  if (num_classes < 2) throw DataError("classification needs at least two classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw DataError("class index " + std::to_string(labels[i]) + " out of range at row " +
                          std::to_string(i),
                      i);
    }
  }
  return Dataset(std::move(x), std::move(labels), TaskKind::classification, num_classes);
}

std::size_t Dataset::output_dim() const {
  return is_classification() ? num_classes_ : targets().cols();
}

const std::vector<std::size_t>& Dataset::labels() const {
  if (!is_classification()) throw DataError("regression dataset has no class labels");
  return std::get<std::vector<std::size_t>>(y_);
}

const Matrix& Dataset::targets() const {
  if (is_classification()) throw DataError("classification dataset has no real-valued targets");
  return std::get<Matrix>(y_);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  return Dataset(x_.select_rows(indices), select_targets(y_, indices), task_, num_classes_);
}

}  // namespace neuboots::nn
