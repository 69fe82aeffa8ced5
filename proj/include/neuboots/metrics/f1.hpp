#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace neuboots::metrics {

// One-vs-rest F1 = 2 TP / (2 TP + FP + FN) per class; 0 when the class is
// neither predicted nor present.
std::vector<double> per_class_f1(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels, std::size_t num_classes);

}  // namespace neuboots::metrics
