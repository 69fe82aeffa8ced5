#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuboots/matrix.hpp"
#include "neuboots/nn/dataset.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/loss.hpp"

namespace neuboots::nn {

struct LayerGrad {
  Matrix weight;
  std::vector<double> bias;
};

// Mirrors DenseNet parameter layout.
struct Gradients {
  std::vector<LayerGrad> layers;
  double loss = 0.0;

  static Gradients zeros_like(const DenseNet& net);
  void scale(double factor);
};

struct Batch {
  Matrix x;
  Targets y;
  std::vector<double> weights;         // empty means unit weights
  std::vector<std::size_t> indices;    // dataset rows, reported on numerical failure
};

// Gradient of (1/m) sum_i w_i l(f(x_i), y_i) with respect to every parameter.
// Throws NumericalError carrying batch.indices if the loss is not finite.
Gradients grad(const DenseNet& net, const Batch& batch, LossKind kind, const ForwardOptions& opts = {});

}  // namespace neuboots::nn
