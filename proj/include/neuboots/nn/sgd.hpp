#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/grad.hpp"

namespace neuboots::nn {

enum class LrSchedule { constant, cosine };

std::string_view to_string(LrSchedule s) noexcept;
LrSchedule parse_schedule(std::string_view name);

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  LrSchedule lr_schedule = LrSchedule::constant;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Learning rate after `step` of `total_steps` optimizer steps.
// Cosine: half-cosine from the initial rate to 0.
double learning_rate_at(const SgdConfig& cfg, std::size_t step, std::size_t total_steps);

// One momentum buffer per parameter tensor.
using MomentumBuffers = Gradients;

// v <- momentum * v + g
// w <- w - lr * v - lr * weight_decay * w    (weights)
// b <- b - lr * v                            (biases)
// Throws NumericalError if any parameter becomes non-finite.
void sgd_step(DenseNet& net, const Gradients& grads, const SgdConfig& cfg, std::size_t step_index,
              std::size_t total_steps, MomentumBuffers& buffers);

class SgdOptimizer {
 public:
  SgdOptimizer(const DenseNet& net, SgdConfig cfg, std::size_t total_steps);

  void step(DenseNet& net, const Gradients& grads);
  std::size_t steps_taken() const noexcept { return step_; }
  double current_learning_rate() const { return learning_rate_at(cfg_, step_, total_steps_); }

 private:
  SgdConfig cfg_;
  std::size_t total_steps_;
  std::size_t step_ = 0;
  MomentumBuffers buffers_;
};

}  // namespace neuboots::nn
