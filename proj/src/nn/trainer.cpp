#include "neuboots/nn/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "neuboots/error.hpp"

namespace neuboots::nn {

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

TrainTrace fit(DenseNet& net, const Dataset& data, LossKind kind, const SgdConfig& cfg,
               std::span<const double> sample_weights, const FitHooks& hooks) {
  cfg.validate();
  const std::size_t n = data.size();
  if (!sample_weights.empty() && sample_weights.size() != n) {
    throw DimensionError("sample weight vector length does not match dataset size");
  }
  if (data.feature_dim() != net.input_dim()) {
    throw DimensionError("dataset has " + std::to_string(data.feature_dim()) +
                             " features but layer 0 expects " + std::to_string(net.input_dim()),
                         0);
  }

  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  SgdOptimizer opt(net, cfg, batches_per_epoch * cfg.epochs);
  Rng order_rng(derive_seed(cfg.seed, 0x5348));

  TrainTrace trace;
  trace.epoch_loss.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (hooks.on_epoch_begin) hooks.on_epoch_begin(epoch);
    const auto order = epoch_order(n, order_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      Batch batch{data.x().select_rows(idx), select_targets(data.y(), idx), {},
                  std::vector<std::size_t>(idx.begin(), idx.end())};
      if (!sample_weights.empty()) {
        batch.weights.reserve(idx.size());
        for (std::size_t i : idx) batch.weights.push_back(sample_weights[i]);
      }
      Matrix scale;
      if (hooks.on_batch) hooks.on_batch(batch, scale);
      ForwardOptions opts;
      if (!scale.empty()) opts.final_input_scale = &scale;

      Gradients g;
      try {
        g = grad(net, batch, kind, opts);
        opt.step(net, g);
      } catch (const NumericalError& e) {
        NumericalError::Where where = e.where();
        where.epoch = epoch;
        where.step = opt.steps_taken();
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                 std::to_string(opt.steps_taken()) + ": " + e.what(),
                             std::move(where));
      }
      total += g.loss * static_cast<double>(idx.size());
    }
    trace.epoch_loss.push_back(total / static_cast<double>(n));
  }
  return trace;
}

}  // namespace neuboots::nn
