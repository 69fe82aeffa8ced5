#pragma once

// Trains and queries any configured method with fixed random streams per
// (seed, role), so methods compared within a seed share their data, their
// initial network and their mini-batch order.

#include <cstdint>
#include <variant>

#include "neuboots/baselines/baselines.hpp"
#include "neuboots/experiments/config.hpp"
#include "neuboots/generator/generator.hpp"

namespace neuboots::experiments {

// Stream identifiers for derive_seed(seed, stream).
enum Stream : std::uint64_t {
  kStreamData = 1,
  kStreamTestData = 2,
  kStreamOutData = 3,
  kStreamInit = 10,
  kStreamBatches = 11,
  kStreamAssignment = 12,
  kStreamAlpha = 13,
  kStreamEnsemble = 14,
  kStreamDropout = 15,
  kStreamPredict = 20,
  kStreamAcquire = 30,
};

struct TrainedMethod {
  Method method = Method::baseline;
  std::variant<baselines::EnsembleOfNets, nn::DenseNet, generator::GeneratorNet, baselines::DropoutPredictor>
      model;
  nn::TrainTrace trace;
};

nn::ArchSpec make_arch(const ModelSpec& model, const nn::Dataset& data);

// `members` sizes the nonparametric ensembles (standard_bootstrap, rwb,
// deep_ensemble).
TrainedMethod train_method(Method method, const nn::ArchSpec& arch, const nn::Dataset& data,
                           const nn::SgdConfig& sgd, std::uint64_t seed, std::size_t members,
                           double dropout_p);

// B samples per input: alpha draws, dropout passes or ensemble members (B is
// ignored for the ensembles and the baseline, which give members / 1 samples).
generator::PredictionEnsemble predict_method(const TrainedMethod& trained, const Matrix& x, std::size_t B,
                                             std::uint64_t seed, bool keep_logits = false);

// The first b samples of an ensemble.
generator::PredictionEnsemble first_samples(const generator::PredictionEnsemble& ens, std::size_t b);

}  // namespace neuboots::experiments
