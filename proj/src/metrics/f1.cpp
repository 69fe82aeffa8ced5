#include "neuboots/metrics/f1.hpp"

#include "neuboots/error.hpp"

namespace neuboots::metrics {

std::vector<double> per_class_f1(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("per-class F1 needs at least two classes");
  if (predictions.size() != labels.size()) throw DimensionError("predictions and labels differ in length");
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t p = predictions[i];
    const std::size_t y = labels[i];
    if (p >= num_classes || y >= num_classes) throw DimensionError("class index out of range");
    if (p == y) {
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  std::vector<double> f1(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    if (denom > 0) f1[c] = 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return f1;
}

}  // namespace neuboots::metrics
