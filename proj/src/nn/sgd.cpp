#include "neuboots/nn/sgd.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "neuboots/error.hpp"
#include "neuboots/simd/kernels.hpp"

namespace neuboots::nn {

std::string_view to_string(LrSchedule s) noexcept {
  return s == LrSchedule::cosine ? "cosine" : "constant";
}

LrSchedule parse_schedule(std::string_view name) {
  if (name == "constant") return LrSchedule::constant;
  if (name == "cosine") return LrSchedule::cosine;
  throw ConfigError("unknown lr schedule '" + std::string(name) + "' (choices: constant, cosine)");
}

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be nonnegative");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

double learning_rate_at(const SgdConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (cfg.lr_schedule == LrSchedule::constant || total_steps == 0) return cfg.learning_rate;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_step(DenseNet& net, const Gradients& grads, const SgdConfig& cfg, std::size_t step_index,
              std::size_t total_steps, MomentumBuffers& buffers) {
  auto layers = net.mutable_layers();
  if (grads.layers.size() != layers.size() || buffers.layers.size() != layers.size()) {
    throw DimensionError("gradient structure does not match network");
  }
  const double lr = learning_rate_at(cfg, step_index, total_steps);
  const double decay = lr * cfg.weight_decay;
  const auto& k = simd::active();

  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const auto& g = grads.layers[l];
    auto& v = buffers.layers[l];
    if (g.weight.rows() != layer.out_dim() || g.weight.cols() != layer.in_dim() ||
        g.bias.size() != layer.bias.size()) {
      throw DimensionError("gradient shape mismatch at layer " + std::to_string(l), l);
    }
    auto w = layer.weight.flat();
    auto vw = v.weight.flat();
    const auto gw = g.weight.flat();
    k.scale(cfg.momentum, vw.data(), vw.size());
    k.axpy(1.0, gw.data(), vw.data(), vw.size());
    if (decay != 0.0) k.scale(1.0 - decay, w.data(), w.size());
    k.axpy(-lr, vw.data(), w.data(), w.size());

    k.scale(cfg.momentum, v.bias.data(), v.bias.size());
    k.axpy(1.0, g.bias.data(), v.bias.data(), v.bias.size());
    k.axpy(-lr, v.bias.data(), layer.bias.data(), layer.bias.size());
  }
  if (!net.all_finite()) {
    NumericalError::Where where;
    where.step = step_index;
    throw NumericalError("non-finite parameter after optimizer step " + std::to_string(step_index),
                         std::move(where));
  }
}

SgdOptimizer::SgdOptimizer(const DenseNet& net, SgdConfig cfg, std::size_t total_steps)
    : cfg_(cfg), total_steps_(total_steps), buffers_(Gradients::zeros_like(net)) {
  cfg_.validate();
}

void SgdOptimizer::step(DenseNet& net, const Gradients& grads) {
  sgd_step(net, grads, cfg_, step_, total_steps_, buffers_);
  ++step_;
}

}  // namespace neuboots::nn
