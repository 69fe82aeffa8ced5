#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "neuboots/matrix.hpp"
#include "neuboots/rng.hpp"

namespace neuboots::nn {

enum class Activation { relu, tanh, identity };
enum class OutputHead { identity, softmax };

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(OutputHead h) noexcept;
Activation parse_activation(std::string_view name);
OutputHead parse_output_head(std::string_view name);

struct DenseLayer {
  Matrix weight;              // [out x in], row-major
  std::vector<double> bias;   // [out]
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
};

// Layer widths for an MLP; hidden layers share one activation and the final
// layer is affine followed by the output head.
struct ArchSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::relu;
  OutputHead head = OutputHead::identity;
};

class DenseNet {
 public:
  // Throws DimensionError if consecutive layer widths do not chain.
  DenseNet(std::vector<DenseLayer> layers, OutputHead head);

  // He-style uniform fan-in initialization, zero biases.
  static DenseNet initialize(const ArchSpec& arch, Rng& rng);

  std::span<const DenseLayer> layers() const noexcept { return layers_; }
  // Values may change; shapes must not.
  std::span<DenseLayer> mutable_layers() noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  OutputHead head() const noexcept { return head_; }
  std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }
  std::size_t num_parameters() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  std::vector<DenseLayer> layers_;
  OutputHead head_;
};

// Elementwise factors applied to the input of the final layer. A single row
// broadcasts over the batch; otherwise one row per input row.
struct ForwardOptions {
  const Matrix* final_input_scale = nullptr;
};

// Per-layer activations kept for backprop.
struct ForwardTrace {
  std::vector<Matrix> pre;        // affine outputs per layer
  std::vector<Matrix> post;       // after activation per layer
  Matrix final_input;             // input to the final layer after scaling
  Matrix outputs;                 // after the output head
};

ForwardTrace forward_trace(const DenseNet& net, const Matrix& x, const ForwardOptions& opts = {});
Matrix forward(const DenseNet& net, const Matrix& x, const ForwardOptions& opts = {});
// Final-layer affine outputs before the output head.
Matrix forward_logits(const DenseNet& net, const Matrix& x, const ForwardOptions& opts = {});

// Applies one layer (affine + activation) to `in`, writing pre-activation and post.
void apply_layer(const DenseLayer& layer, const Matrix& in, Matrix& pre, Matrix& post);
// Row-wise numerically stable softmax, in place.
void softmax_rows(Matrix& m);
void apply_output_head(OutputHead head, Matrix& m);

}  // namespace neuboots::nn
