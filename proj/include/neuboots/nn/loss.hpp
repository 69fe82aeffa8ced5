#pragma once

#include <span>
#include <string_view>

#include "neuboots/matrix.hpp"
#include "neuboots/nn/dataset.hpp"

namespace neuboots::nn {

enum class LossKind { mse, cross_entropy, brier };

std::string_view to_string(LossKind k) noexcept;
LossKind parse_loss(std::string_view name);

// Floor applied to the true-class probability before taking its log.
inline constexpr double kLogProbFloor = 1e-12;

// Per-sample loss terms l_i for `outputs` (post output head).
//   mse:           sum_j (out_ij - y_ij)^2
//   cross_entropy: -log(max(p_i,y_i, 1e-12))
//   brier:         sum_j (p_ij - onehot_ij)^2
std::vector<double> per_sample_loss(const Matrix& outputs, const Targets& y, LossKind kind);

// (1/m) sum_i w_i l_i. An empty weight span means unit weights.
double loss(const Matrix& outputs, const Targets& y, std::span<const double> weights, LossKind kind);

}  // namespace neuboots::nn
