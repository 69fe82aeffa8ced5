#include "neuboots/baselines/baselines.hpp"

#include <string>

#include "neuboots/bootstrap/weights.hpp"
#include "neuboots/error.hpp"

namespace neuboots::baselines {

std::string_view to_string(MethodTag t) noexcept {
  switch (t) {
    case MethodTag::standard_bootstrap:
      return "standard_bootstrap";
    case MethodTag::rwb:
      return "rwb";
    case MethodTag::deep_ensemble_plain:
      return "deep_ensemble_plain";
  }
  return "deep_ensemble_plain";
}

MethodTag parse_method_tag(std::string_view name) {
  if (name == "standard_bootstrap") return MethodTag::standard_bootstrap;
  if (name == "rwb") return MethodTag::rwb;
  if (name == "deep_ensemble_plain") return MethodTag::deep_ensemble_plain;
  throw ConfigError("unknown ensemble method tag '" + std::string(name) + "'");
}

nn::LossKind default_loss(const nn::Dataset& data) noexcept {
  return data.is_classification() ? nn::LossKind::cross_entropy : nn::LossKind::mse;
}

namespace {

enum class MemberData { resample, dirichlet_weights, full };

EnsembleOfNets train_members(const nn::ArchSpec& arch, const nn::Dataset& data, std::size_t members,
                             const nn::SgdConfig& cfg, Rng& rng, const EnsembleTrainOptions& opts,
                             MemberData mode, MethodTag tag) {
  if (members == 0) throw ConfigError("ensemble needs at least one member");
  cfg.validate();
  std::vector<Rng> streams;
  streams.reserve(members);
  for (std::size_t b = 0; b < members; ++b) streams.push_back(rng.split());

  const nn::LossKind kind = opts.loss.value_or(default_loss(data));
  EnsembleOfNets out;
  out.method = tag;
  out.members.reserve(members);
  if (opts.traces != nullptr) opts.traces->clear();

  for (std::size_t b = 0; b < members; ++b) {
    Rng& stream = streams[b];
    nn::DenseNet net = nn::DenseNet::initialize(arch, stream);
    std::vector<double> weights;
    std::optional<nn::Dataset> resampled;
    if (mode == MemberData::resample && !opts.identity_resample) {
      const auto idx = bootstrap::resample_indices(data.size(), stream);
      resampled = data.subset(idx);
    } else if (mode == MemberData::dirichlet_weights && !opts.unit_weights) {
      weights = bootstrap::sample_dirichlet_weights(data.size(), stream);
    }
    nn::SgdConfig member_cfg = cfg;
    member_cfg.seed = stream.next_u64();
    try {
      auto trace = nn::fit(net, resampled ? *resampled : data, kind, member_cfg, weights);
      if (opts.traces != nullptr) opts.traces->push_back(std::move(trace));
    } catch (const NumericalError& e) {
      NumericalError::Where where = e.where();
      where.member = b;
      throw NumericalError("ensemble member " + std::to_string(b) + ": " + e.what(), std::move(where));
    }
    out.members.push_back(std::move(net));
  }
  return out;
}

}  // namespace

EnsembleOfNets standard_bootstrap_train(const nn::ArchSpec& arch, const nn::Dataset& data,
                                        std::size_t members, const nn::SgdConfig& cfg, Rng& rng,
                                        const EnsembleTrainOptions& opts) {
  return train_members(arch, data, members, cfg, rng, opts, MemberData::resample,
                       MethodTag::standard_bootstrap);
}

EnsembleOfNets rwb_train(const nn::ArchSpec& arch, const nn::Dataset& data, std::size_t members,
                         const nn::SgdConfig& cfg, Rng& rng, const EnsembleTrainOptions& opts) {
  return train_members(arch, data, members, cfg, rng, opts, MemberData::dirichlet_weights,
                       MethodTag::rwb);
}

EnsembleOfNets deep_ensemble_train(const nn::ArchSpec& arch, const nn::Dataset& data,
                                   std::size_t members, const nn::SgdConfig& cfg, Rng& rng,
                                   const EnsembleTrainOptions& opts) {
  return train_members(arch, data, members, cfg, rng, opts, MemberData::full,
                       MethodTag::deep_ensemble_plain);
}

PredictionEnsemble ensemble_predict(const EnsembleOfNets& ensemble, const Matrix& x, bool keep_logits) {
  if (ensemble.members.empty()) throw ConfigError("cannot predict with an empty ensemble");
  const std::size_t d = ensemble.members.front().output_dim();
  PredictionEnsemble out(ensemble.members.size(), x.rows(), d, keep_logits);
  for (std::size_t b = 0; b < ensemble.members.size(); ++b) {
    const nn::ForwardTrace t = nn::forward_trace(ensemble.members[b], x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto o = t.outputs.row(i);
      std::copy(o.begin(), o.end(), out.sample(b, i).begin());
      if (keep_logits) {
        const auto z = t.post.back().row(i);
        std::copy(z.begin(), z.end(), out.logit(b, i).begin());
      }
    }
  }
  return out;
}

void validate_dropout_rate(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in (0, 1)");
}

Matrix dropout_mask(std::size_t rows, std::size_t width, double p, Rng& rng) {
  validate_dropout_rate(p);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(rows, width);
  for (double& v : mask.flat()) v = rng.uniform() < p ? 0.0 : keep_scale;
  return mask;
}

nn::TrainTrace train_with_dropout(nn::DenseNet& net, const nn::Dataset& data, double p,
                                  const nn::SgdConfig& cfg, Rng& rng, std::optional<nn::LossKind> loss) {
  validate_dropout_rate(p);
  if (net.num_layers() < 2) throw DimensionError("dropout needs a hidden feature layer");
  const std::size_t width = net.layers().back().in_dim();
  nn::FitHooks hooks;
  hooks.on_batch = [&](nn::Batch& batch, Matrix& scale) {
    scale = dropout_mask(batch.x.rows(), width, p, rng);
  };
  return nn::fit(net, data, loss.value_or(default_loss(data)), cfg, {}, hooks);
}

DropoutPredictor dropout_train(const nn::ArchSpec& arch, const nn::Dataset& data, double p,
                               const nn::SgdConfig& cfg, Rng& rng, std::optional<nn::LossKind> loss) {
  nn::DenseNet net = nn::DenseNet::initialize(arch, rng);
  train_with_dropout(net, data, p, cfg, rng, loss);
  return {std::move(net), p};
}

PredictionEnsemble mc_dropout_predict(const DropoutPredictor& pred, const Matrix& x,
                                      std::size_t replicates, Rng& rng, bool keep_logits) {
  validate_dropout_rate(pred.p);
  const std::size_t width = pred.net.layers().back().in_dim();
  PredictionEnsemble out(replicates, x.rows(), pred.net.output_dim(), keep_logits);
  for (std::size_t b = 0; b < replicates; ++b) {
    const Matrix mask = dropout_mask(x.rows(), width, pred.p, rng);
    const nn::ForwardTrace t = nn::forward_trace(pred.net, x, {&mask});
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto o = t.outputs.row(i);
      std::copy(o.begin(), o.end(), out.sample(b, i).begin());
      if (keep_logits) {
        const auto z = t.post.back().row(i);
        std::copy(z.begin(), z.end(), out.logit(b, i).begin());
      }
    }
  }
  return out;
}

}  // namespace neuboots::baselines
