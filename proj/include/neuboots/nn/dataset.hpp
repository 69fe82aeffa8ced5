#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "neuboots/matrix.hpp"

namespace neuboots::nn {

enum class TaskKind { regression, classification };

// Regression targets are an [n x d] matrix; classification targets are class indices.
using Targets = std::variant<Matrix, std::vector<std::size_t>>;

std::size_t target_count(const Targets& y);
Targets select_targets(const Targets& y, std::span<const std::size_t> indices);

class Dataset {
 public:
  static Dataset regression(Matrix x, Matrix y);
  static Dataset classification(Matrix x, std::vector<std::size_t> labels, std::size_t num_classes);

  std::size_t size() const noexcept { return x_.rows(); }
  std::size_t feature_dim() const noexcept { return x_.cols(); }
  TaskKind task() const noexcept { return task_; }
  bool is_classification() const noexcept { return task_ == TaskKind::classification; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  // Output width a model needs: d for regression, k for classification.
  std::size_t output_dim() const;

  const Matrix& x() const noexcept { return x_; }
  const Targets& y() const noexcept { return y_; }
  const std::vector<std::size_t>& labels() const;
  const Matrix& targets() const;

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Dataset(Matrix x, Targets y, TaskKind task, std::size_t num_classes);

  Matrix x_;
  Targets y_;
  TaskKind task_;
  std::size_t num_classes_ = 0;
};

}  // namespace neuboots::nn
