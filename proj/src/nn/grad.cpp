#include "neuboots/nn/grad.hpp"

#include <cmath>
#include <string>

#include "neuboots/error.hpp"
#include "neuboots/simd/kernels.hpp"

namespace neuboots::nn {

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
  }
  return g;
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    simd::scale(factor, l.weight.flat());
    simd::scale(factor, l.bias);
  }
}

namespace {

// dL/d(final affine output) for the weighted mean loss.
Matrix output_delta(const Matrix& outputs, const Batch& batch,
                    LossKind kind, OutputHead head) {
  const std::size_t m = outputs.rows();
  const std::size_t d = outputs.cols();
  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix delta(m, d);
  const auto* labels = std::get_if<std::vector<std::size_t>>(&batch.y);
  const auto* targets = std::get_if<Matrix>(&batch.y);

  for (std::size_t i = 0; i < m; ++i) {
    const double w = (batch.weights.empty() ? 1.0 : batch.weights[i]) * inv_m;
    auto dr = delta.row(i);
    const auto p = outputs.row(i);

    if (kind == LossKind::cross_entropy && head == OutputHead::softmax) {
      const std::size_t c = (*labels)[i];
      if (p[c] < kLogProbFloor) continue;  // clamped region: loss is constant
      for (std::size_t j = 0; j < d; ++j) dr[j] = w * (p[j] - (j == c ? 1.0 : 0.0));
      continue;
    }

    // Gradient with respect to head outputs.
    std::vector<double> g(d);
    switch (kind) {
      case LossKind::mse:
        for (std::size_t j = 0; j < d; ++j) g[j] = 2.0 * (p[j] - (*targets)(i, j));
        break;
      case LossKind::brier: {
        const std::size_t c = (*labels)[i];
        for (std::size_t j = 0; j < d; ++j) g[j] = 2.0 * (p[j] - (j == c ? 1.0 : 0.0));
        break;
      }
      case LossKind::cross_entropy: {
        const std::size_t c = (*labels)[i];
        if (p[c] >= kLogProbFloor) g[c] = -1.0 / p[c];
        break;
      }
    }
    if (head == OutputHead::softmax) {
      double pg = 0.0;
      for (std::size_t j = 0; j < d; ++j) pg += p[j] * g[j];
      for (std::size_t j = 0; j < d; ++j) dr[j] = w * p[j] * (g[j] - pg);
    } else {
      for (std::size_t j = 0; j < d; ++j) dr[j] = w * g[j];
    }
  }
  return delta;
}

void activation_backward(Activation a, const Matrix& pre, const Matrix& post, Matrix& grad) {
  auto g = grad.flat();
  const auto z = pre.flat();
  const auto y = post.flat();
  switch (a) {
    case Activation::relu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(z[i] > 0.0)) g[i] = 0.0;
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::identity:
      break;
  }
}

}  // namespace

Gradients grad(const DenseNet& net, const Batch& batch, LossKind kind, const ForwardOptions& opts) {
  if (!batch.weights.empty() && batch.weights.size() != batch.x.rows()) {
    throw DimensionError("sample weight length " + std::to_string(batch.weights.size()) +
                         " does not match batch size " + std::to_string(batch.x.rows()));
  }
  for (double w : batch.weights) {
    if (!(w >= 0.0)) throw DimensionError("sample weights must be nonnegative");
  }
  if (kind != LossKind::mse && net.head() != OutputHead::softmax) {
    throw DimensionError("cross_entropy and brier losses need a softmax output head");
  }

  const ForwardTrace trace = forward_trace(net, batch.x, opts);
  Gradients g = Gradients::zeros_like(net);
  g.loss = loss(trace.outputs, batch.y, batch.weights, kind);
  if (!std::isfinite(g.loss)) {
    NumericalError::Where where;
    where.batch_indices = batch.indices;
    throw NumericalError("non-finite loss in batch", std::move(where));
  }

  const std::size_t L = net.num_layers();
  const std::size_t m = batch.x.rows();
  const auto& k = simd::active();
  Matrix delta = output_delta(trace.outputs, batch, kind, net.head());

  for (std::size_t l = L; l-- > 0;) {
    const DenseLayer& layer = net.layers()[l];
    if (l + 1 < L) activation_backward(layer.activation, trace.pre[l], trace.post[l], delta);
    const Matrix& in = (l + 1 == L) ? trace.final_input : (l == 0 ? batch.x : trace.post[l - 1]);
    auto& lg = g.layers[l];
    const std::size_t in_dim = layer.in_dim();
    for (std::size_t r = 0; r < m; ++r) {
      const double* dr = delta.row(r).data();
      const double* xr = in.row(r).data();
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        if (dr[o] == 0.0) continue;
        k.axpy(dr[o], xr, lg.weight.row(o).data(), in_dim);
        lg.bias[o] += dr[o];
      }
    }
    if (l == 0) break;

    Matrix prev(m, in_dim);
    for (std::size_t r = 0; r < m; ++r) {
      const double* dr = delta.row(r).data();
      double* pr = prev.row(r).data();
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        if (dr[o] == 0.0) continue;
        k.axpy(dr[o], layer.weight.row(o).data(), pr, in_dim);
      }
    }
    if (l + 1 == L && opts.final_input_scale != nullptr) {
      const Matrix& s = *opts.final_input_scale;
      for (std::size_t r = 0; r < m; ++r) {
        k.mul(prev.row(r).data(), s.row(s.rows() == 1 ? 0 : r).data(), prev.row(r).data(), in_dim);
      }
    }
    delta = std::move(prev);
  }
  return g;
}

}  // namespace neuboots::nn
