#include "neuboots/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuboots/error.hpp"

namespace neuboots::nn {

std::string_view to_string(LossKind k) noexcept {
  switch (k) {
    case LossKind::mse:
      return "mse";
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::brier:
      return "brier";
  }
  return "mse";
}

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "brier") return LossKind::brier;
  throw ConfigError("unknown loss '" + std::string(name) + "' (choices: mse, cross_entropy, brier)");
}

std::vector<double> per_sample_loss(const Matrix& outputs, const Targets& y, LossKind kind) {
  const std::size_t m = outputs.rows();
  if (target_count(y) != m) {
    throw DimensionError("loss: " + std::to_string(m) + " outputs but " +
                         std::to_string(target_count(y)) + " targets");
  }
  std::vector<double> terms(m, 0.0);
  if (kind == LossKind::mse) {
    const auto* t = std::get_if<Matrix>(&y);
    if (t == nullptr) throw DimensionError("mse loss needs real-valued targets");
    if (t->cols() != outputs.cols()) throw DimensionError("mse loss: target width mismatch");
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < outputs.cols(); ++j) {
        const double d = outputs(i, j) - (*t)(i, j);
        s += d * d;
      }
      terms[i] = s;
    }
    return terms;
  }

  const auto* labels = std::get_if<std::vector<std::size_t>>(&y);
  if (labels == nullptr) throw DimensionError("classification loss needs class labels");
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = (*labels)[i];
    if (c >= outputs.cols()) throw DimensionError("class label exceeds output width");
    if (kind == LossKind::cross_entropy) {
      terms[i] = -std::log(std::max(outputs(i, c), kLogProbFloor));
    } else {
      double s = 0.0;
      for (std::size_t j = 0; j < outputs.cols(); ++j) {
        const double d = outputs(i, j) - (j == c ? 1.0 : 0.0);
        s += d * d;
      }
      terms[i] = s;
    }
  }
  return terms;
}

double loss(const Matrix& outputs, const Targets& y, std::span<const double> weights, LossKind kind) {
  const auto terms = per_sample_loss(outputs, y, kind);
  if (!weights.empty() && weights.size() != terms.size()) {
    throw DimensionError("loss: weight vector length does not match batch size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    sum += (weights.empty() ? 1.0 : weights[i]) * terms[i];
  }
  return sum / static_cast<double>(terms.size());
}

}  // namespace neuboots::nn
