#pragma once

// Bootstrap generator g(x, alpha) = M(F(x) * alpha): a DenseNet whose final
// affine layer M sees the feature vector F(x) scaled elementwise by the block
// weights alpha. S, the number of blocks, equals the width of F(x).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "neuboots/bootstrap/weights.hpp"
#include "neuboots/matrix.hpp"
#include "neuboots/nn/dataset.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/loss.hpp"
#include "neuboots/nn/sgd.hpp"
#include "neuboots/nn/trainer.hpp"
#include "neuboots/rng.hpp"

namespace neuboots::generator {

using bootstrap::BlockAssignment;
using bootstrap::BootstrapAlpha;

class GeneratorNet {
 public:
  // `net` needs at least two layers: everything but the last is the feature
  // extractor, the last is the head.
  explicit GeneratorNet(nn::DenseNet net, std::uint64_t assignment_seed = 0);

  // Needs at least one hidden layer; S is the last hidden width.
  static GeneratorNet initialize(const nn::ArchSpec& arch, Rng& rng);

  // The plain composition M(F(x)).
  const nn::DenseNet& net() const noexcept { return net_; }
  // Invalidates previously cached features.
  nn::DenseNet& mutable_net() noexcept;

  const nn::DenseLayer& head() const noexcept { return net_.layers().back(); }
  std::size_t num_blocks() const noexcept { return head().in_dim(); }
  std::size_t output_dim() const noexcept { return net_.output_dim(); }
  std::uint64_t version() const noexcept { return version_; }

  std::uint64_t assignment_seed() const noexcept { return assignment_seed_; }
  void set_assignment_seed(std::uint64_t seed) noexcept { assignment_seed_ = seed; }

 private:
  nn::DenseNet net_;
  std::uint64_t assignment_seed_ = 0;
  std::uint64_t version_;
};

// F(x*) for a fixed batch, tagged with the version of the net that produced it.
struct CachedFeatures {
  Matrix phi;
  std::uint64_t source_net_version = 0;
};

CachedFeatures cache_features(const GeneratorNet& g, const Matrix& x);

struct HeadOutput {
  Matrix outputs;  // after the output head
  Matrix logits;   // before the output head
};

// M(phi * alpha). Throws Error if the cache came from a different net version.
HeadOutput head_forward(const GeneratorNet& g, const CachedFeatures& cache, const BootstrapAlpha& alpha);

// M(F(x) * alpha), computed from scratch.
Matrix generator_forward(const GeneratorNet& g, const Matrix& x, const BootstrapAlpha& alpha);
Matrix generator_logits(const GeneratorNet& g, const Matrix& x, const BootstrapAlpha& alpha);

struct TrainOptions {
  // mse for regression, cross_entropy for classification when unset.
  std::optional<nn::LossKind> loss;
  // Test hook: alpha = 1 every epoch, which reduces to plain training.
  bool freeze_alpha_to_one = false;
};

// One alpha ~ S * Dirichlet(1, ..., 1) per epoch from `rng`. Within the epoch
// the same alpha scales the features of every mini-batch and, through the
// block assignment, weights every sample's loss term.
nn::TrainTrace train(GeneratorNet& g, const nn::Dataset& data, const BlockAssignment& assignment,
                     const nn::SgdConfig& cfg, Rng& rng, const TrainOptions& opts = {});

// B bootstrap predictions for each of m inputs.
class PredictionEnsemble {
 public:
  PredictionEnsemble(std::size_t replicates, std::size_t inputs, std::size_t output_dim,
                     bool has_logits);

  std::size_t replicates() const noexcept { return b_; }
  std::size_t inputs() const noexcept { return m_; }
  std::size_t output_dim() const noexcept { return d_; }
  bool has_logits() const noexcept { return !logits_.empty(); }

  std::span<double> sample(std::size_t b, std::size_t i) { return {values_.data() + offset(b, i), d_}; }
  std::span<const double> sample(std::size_t b, std::size_t i) const {
    return {values_.data() + offset(b, i), d_};
  }
  std::span<double> logit(std::size_t b, std::size_t i) { return {logits_.data() + offset(b, i), d_}; }
  std::span<const double> logit(std::size_t b, std::size_t i) const {
    return {logits_.data() + offset(b, i), d_};
  }

  // [B x d] samples (or logits) for input i.
  Matrix for_input(std::size_t i) const;
  Matrix logits_for_input(std::size_t i) const;
  // Ensemble average, [m x d].
  Matrix mean() const;

 private:
  std::size_t offset(std::size_t b, std::size_t i) const noexcept { return (b * m_ + i) * d_; }

  std::size_t b_, m_, d_;
  std::vector<double> values_;
  std::vector<double> logits_;
};

// Caches F(x*) once, then evaluates only the head for alpha^(1..B) drawn from
// `rng`. Equal to B calls of generator_forward with the same alpha sequence.
PredictionEnsemble predict_bootstrap(const GeneratorNet& g, const Matrix& x, std::size_t replicates,
                                     Rng& rng, bool keep_logits = false);

// Reference path: full forward pass per replicate, same alpha sequence.
PredictionEnsemble predict_bootstrap_uncached(const GeneratorNet& g, const Matrix& x,
                                              std::size_t replicates, Rng& rng,
                                              bool keep_logits = false);

// Test hook: every alpha is the 1-vector.
PredictionEnsemble predict_unit_alpha(const GeneratorNet& g, const Matrix& x, std::size_t replicates);

}  // namespace neuboots::generator
