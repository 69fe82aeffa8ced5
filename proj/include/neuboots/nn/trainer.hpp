#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "neuboots/nn/dataset.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/grad.hpp"
#include "neuboots/nn/loss.hpp"
#include "neuboots/nn/sgd.hpp"

namespace neuboots::nn {

struct TrainTrace {
  // Size-weighted mean of the mini-batch losses, one entry per epoch.
  std::vector<double> epoch_loss;
};

// Extension points for the mini-batch SGD loop. Each hook may be empty.
struct FitHooks {
  // Called once before the first mini-batch of every epoch.
  std::function<void(std::size_t epoch)> on_epoch_begin;
  // May set batch.weights and a final-layer scale for the batch. `scale` is
  // left empty (0x0) for "no scaling".
  std::function<void(Batch& batch, Matrix& scale)> on_batch;
};

// Mini-batch SGD over `data`. Mini-batch order is drawn from a stream derived
// from cfg.seed and nothing else, so two calls with the same net, data and
// config visit batches identically regardless of what the hooks do.
// `sample_weights` (length n, or empty) multiply the per-sample loss terms.
TrainTrace fit(DenseNet& net, const Dataset& data, LossKind kind, const SgdConfig& cfg,
               std::span<const double> sample_weights = {}, const FitHooks& hooks = {});

// Shuffled index order for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng);

}  // namespace neuboots::nn
