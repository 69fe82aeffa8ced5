#pragma once

// Reference uncertainty methods: nonparametric bootstrap ensembles, per-sample
// random-weight bootstrap (RWB), plain independent-init ensembles and
// final-feature-layer Monte-Carlo dropout.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "neuboots/generator/generator.hpp"
#include "neuboots/nn/dataset.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/sgd.hpp"
#include "neuboots/nn/trainer.hpp"
#include "neuboots/rng.hpp"

namespace neuboots::baselines {

using generator::PredictionEnsemble;

enum class MethodTag { standard_bootstrap, rwb, deep_ensemble_plain };

std::string_view to_string(MethodTag t) noexcept;
MethodTag parse_method_tag(std::string_view name);

struct EnsembleOfNets {
  std::vector<nn::DenseNet> members;
  MethodTag method = MethodTag::deep_ensemble_plain;
};

struct EnsembleTrainOptions {
  std::optional<nn::LossKind> loss;
  // Test hooks: skip resampling / use unit weights.
  bool identity_resample = false;
  bool unit_weights = false;
  // Filled with each member's loss trace when non-null.
  std::vector<nn::TrainTrace>* traces = nullptr;
};

// Member b draws everything from its own stream, rng.split() taken in member
// order before any training starts: first the initial parameters, then its
// resample or weights, then the mini-batch seed. Results do not depend on the
// order in which members finish.
EnsembleOfNets standard_bootstrap_train(const nn::ArchSpec& arch, const nn::Dataset& data,
                                        std::size_t members, const nn::SgdConfig& cfg, Rng& rng,
                                        const EnsembleTrainOptions& opts = {});

// Each member fits the weighted loss with one fixed w ~ n * Dirichlet(1, ..., 1).
EnsembleOfNets rwb_train(const nn::ArchSpec& arch, const nn::Dataset& data, std::size_t members,
                         const nn::SgdConfig& cfg, Rng& rng, const EnsembleTrainOptions& opts = {});

// Independent initializations on the full data (cross-entropy for classification).
EnsembleOfNets deep_ensemble_train(const nn::ArchSpec& arch, const nn::Dataset& data,
                                   std::size_t members, const nn::SgdConfig& cfg, Rng& rng,
                                   const EnsembleTrainOptions& opts = {});

// One sample per member.
PredictionEnsemble ensemble_predict(const EnsembleOfNets& ensemble, const Matrix& x,
                                    bool keep_logits = false);

// Dropout on the input of the final layer only, inverted scaling (kept units
// are multiplied by 1 / (1 - p)), so the deterministic path is the plain forward.
struct DropoutPredictor {
  nn::DenseNet net;
  double p = 0.1;
};

void validate_dropout_rate(double p);

// Trains net with a fresh Bernoulli(1 - p) mask per sample per mini-batch.
nn::TrainTrace train_with_dropout(nn::DenseNet& net, const nn::Dataset& data, double p,
                                  const nn::SgdConfig& cfg, Rng& rng,
                                  std::optional<nn::LossKind> loss = std::nullopt);

DropoutPredictor dropout_train(const nn::ArchSpec& arch, const nn::Dataset& data, double p,
                               const nn::SgdConfig& cfg, Rng& rng,
                               std::optional<nn::LossKind> loss = std::nullopt);

// B full stochastic forward passes, each input with its own mask per pass.
PredictionEnsemble mc_dropout_predict(const DropoutPredictor& pred, const Matrix& x,
                                      std::size_t replicates, Rng& rng, bool keep_logits = false);

// [rows x width] matrix of inverted-dropout factors: 0 or 1 / (1 - p).
Matrix dropout_mask(std::size_t rows, std::size_t width, double p, Rng& rng);

nn::LossKind default_loss(const nn::Dataset& data) noexcept;

}  // namespace neuboots::baselines
