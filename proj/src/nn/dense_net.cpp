#include "neuboots/nn/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuboots/error.hpp"
#include "neuboots/simd/kernels.hpp"

namespace neuboots::nn {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

std::string_view to_string(OutputHead h) noexcept {
  return h == OutputHead::softmax ? "softmax" : "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "' (choices: relu, tanh, identity)");
}

OutputHead parse_output_head(std::string_view name) {
  if (name == "identity") return OutputHead::identity;
  if (name == "softmax") return OutputHead::softmax;
  throw ConfigError("unknown output head '" + std::string(name) + "' (choices: identity, softmax)");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers, OutputHead head)
    : layers_(std::move(layers)), head_(head) {
  if (layers_.empty()) throw DimensionError("network needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.in_dim() == 0 || layer.out_dim() == 0) {
      throw DimensionError("layer " + std::to_string(l) + " has a zero dimension", l);
    }
    if (layer.bias.size() != layer.out_dim()) {
      throw DimensionError("layer " + std::to_string(l) + " bias length " +
                               std::to_string(layer.bias.size()) + " != out dim " +
                               std::to_string(layer.out_dim()),
                           l);
    }
    if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) {
      throw DimensionError("layer " + std::to_string(l) + " expects input " +
                               std::to_string(layer.in_dim()) + " but layer " +
                               std::to_string(l - 1) + " produces " +
                               std::to_string(layers_[l - 1].out_dim()),
                           l);
    }
  }
}

DenseNet DenseNet::initialize(const ArchSpec& arch, Rng& rng) {
  std::vector<std::size_t> dims{arch.input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.output_dim);

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    if (in == 0 || out == 0) throw ConfigError("layer widths must be positive");
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0),
                     l + 2 == dims.size() ? Activation::identity : arch.hidden_activation};
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (double& w : layer.weight.flat()) w = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers), arch.head);
}

std::size_t DenseNet::num_parameters() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool DenseNet::all_finite() const noexcept {
  for (const auto& l : layers_) {
    for (double v : l.weight.flat()) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.head_ != b.head_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const auto& x = a.layers_[l];
    const auto& y = b.layers_[l];
    if (x.activation != y.activation || !(x.weight == y.weight) || x.bias != y.bias) return false;
  }
  return true;
}

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::tanh:
      return std::tanh(v);
    case Activation::identity:
      return v;
  }
  return v;
}

Matrix scaled_copy(const Matrix& in, const Matrix& scale, std::size_t layer_index) {
  if (scale.cols() != in.cols() || (scale.rows() != 1 && scale.rows() != in.rows())) {
    throw DimensionError("final-layer scale is " + std::to_string(scale.rows()) + "x" +
                             std::to_string(scale.cols()) + " but layer " +
                             std::to_string(layer_index) + " input is " +
                             std::to_string(in.rows()) + "x" + std::to_string(in.cols()),
                         layer_index);
  }
  Matrix out(in.rows(), in.cols());
  const auto& k = simd::active();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto s = scale.row(scale.rows() == 1 ? 0 : r);
    k.mul(in.row(r).data(), s.data(), out.row(r).data(), in.cols());
  }
  return out;
}

}  // namespace

void apply_layer(const DenseLayer& layer, const Matrix& in, Matrix& pre, Matrix& post) {
  const std::size_t m = in.rows();
  const std::size_t out = layer.out_dim();
  pre = Matrix(m, out);
  const auto& k = simd::active();
  for (std::size_t r = 0; r < m; ++r) {
    const double* xr = in.row(r).data();
    double* pr = pre.row(r).data();
    for (std::size_t o = 0; o < out; ++o) {
      pr[o] = k.dot(xr, layer.weight.row(o).data(), layer.in_dim()) + layer.bias[o];
    }
  }
  if (layer.activation == Activation::identity) {
    post = pre;
    return;
  }
  post = Matrix(m, out);
  auto src = pre.flat();
  auto dst = post.flat();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = activate(layer.activation, src[i]);
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

void apply_output_head(OutputHead head, Matrix& m) {
  if (head == OutputHead::softmax) softmax_rows(m);
}

ForwardTrace forward_trace(const DenseNet& net, const Matrix& x, const ForwardOptions& opts) {
  if (x.cols() != net.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns but layer 0 expects " +
                             std::to_string(net.input_dim()),
                         0);
  }
  const std::size_t L = net.num_layers();
  ForwardTrace t;
  t.pre.resize(L);
  t.post.resize(L);
  const Matrix* in = &x;
  for (std::size_t l = 0; l < L; ++l) {
    if (l + 1 == L) {
      if (opts.final_input_scale != nullptr) {
        t.final_input = scaled_copy(*in, *opts.final_input_scale, l);
      } else {
        t.final_input = *in;
      }
      in = &t.final_input;
    }
    apply_layer(net.layers()[l], *in, t.pre[l], t.post[l]);
    in = &t.post[l];
  }
  t.outputs = t.post.back();
  apply_output_head(net.head(), t.outputs);
  return t;
}

Matrix forward(const DenseNet& net, const Matrix& x, const ForwardOptions& opts) {
  return std::move(forward_trace(net, x, opts).outputs);
}

Matrix forward_logits(const DenseNet& net, const Matrix& x, const ForwardOptions& opts) {
  return std::move(forward_trace(net, x, opts).post.back());
}

}  // namespace neuboots::nn
