#include "neuboots/experiments/methods.hpp"

#include <algorithm>

#include "neuboots/error.hpp"

namespace neuboots::experiments {

nn::ArchSpec make_arch(const ModelSpec& model, const nn::Dataset& data) {
  nn::ArchSpec arch;
  arch.input_dim = data.feature_dim();
  arch.hidden = model.hidden;
  arch.output_dim = data.output_dim();
  arch.hidden_activation = model.activation;
  arch.head = data.is_classification() ? nn::OutputHead::softmax : nn::OutputHead::identity;
  return arch;
}

TrainedMethod train_method(Method method, const nn::ArchSpec& arch, const nn::Dataset& data,
                           const nn::SgdConfig& sgd, std::uint64_t seed, std::size_t members,
                           double dropout_p) {
  nn::SgdConfig cfg = sgd;
  cfg.seed = derive_seed(seed, kStreamBatches);
  const auto loss = baselines::default_loss(data);
  Rng init(derive_seed(seed, kStreamInit));
  TrainedMethod out;
  out.method = method;
  switch (method) {
    case Method::baseline: {
      auto net = nn::DenseNet::initialize(arch, init);
      out.trace = nn::fit(net, data, loss, cfg);
      out.model = std::move(net);
      break;
    }
    case Method::neuboots: {
      auto g = generator::GeneratorNet::initialize(arch, init);
      const auto assignment_seed = derive_seed(seed, kStreamAssignment);
      g.set_assignment_seed(assignment_seed);
      Rng assign_rng(assignment_seed);
      const auto assignment = data.is_classification()
                                  ? bootstrap::assign_blocks(std::span<const std::size_t>(data.labels()),
                                                             data.size(), g.num_blocks(), assign_rng)
                                  : bootstrap::assign_blocks(std::nullopt, data.size(), g.num_blocks(),
                                                             assign_rng);
      Rng alpha_rng(derive_seed(seed, kStreamAlpha));
      out.trace = generator::train(g, data, assignment, cfg, alpha_rng, {loss, false});
      out.model = std::move(g);
      break;
    }
    case Method::mc_dropout: {
      Rng rng(derive_seed(seed, kStreamDropout));
      auto net = nn::DenseNet::initialize(arch, init);
      out.trace = baselines::train_with_dropout(net, data, dropout_p, cfg, rng, loss);
      out.model = baselines::DropoutPredictor{std::move(net), dropout_p};
      break;
    }
    case Method::standard_bootstrap:
    case Method::rwb:
    case Method::deep_ensemble: {
      Rng rng(derive_seed(seed, kStreamEnsemble));
      std::vector<nn::TrainTrace> traces;
      baselines::EnsembleTrainOptions opts;
      opts.loss = loss;
      opts.traces = &traces;
      if (method == Method::standard_bootstrap) {
        out.model = baselines::standard_bootstrap_train(arch, data, members, cfg, rng, opts);
      } else if (method == Method::rwb) {
        out.model = baselines::rwb_train(arch, data, members, cfg, rng, opts);
      } else {
        out.model = baselines::deep_ensemble_train(arch, data, members, cfg, rng, opts);
      }
      // Member-averaged loss per epoch.
      out.trace.epoch_loss.assign(cfg.epochs, 0.0);
      for (const auto& t : traces) {
        for (std::size_t e = 0; e < t.epoch_loss.size() && e < cfg.epochs; ++e) {
          out.trace.epoch_loss[e] += t.epoch_loss[e] / static_cast<double>(traces.size());
        }
      }
      break;
    }
  }
  return out;
}

generator::PredictionEnsemble predict_method(const TrainedMethod& trained, const Matrix& x, std::size_t B,
                                             std::uint64_t seed, bool keep_logits) {
  Rng rng(derive_seed(seed, kStreamPredict));
  struct Visitor {
    const Matrix& x;
    std::size_t B;
    Rng& rng;
    bool keep_logits;

    generator::PredictionEnsemble operator()(const nn::DenseNet& net) const {
      const auto trace = nn::forward_trace(net, x);
      generator::PredictionEnsemble ens(1, x.rows(), net.output_dim(), keep_logits);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        std::copy_n(trace.outputs.row(i).begin(), net.output_dim(), ens.sample(0, i).begin());
        if (keep_logits) {
          std::copy_n(trace.pre.back().row(i).begin(), net.output_dim(), ens.logit(0, i).begin());
        }
      }
      return ens;
    }
    generator::PredictionEnsemble operator()(const generator::GeneratorNet& g) const {
      return generator::predict_bootstrap(g, x, B, rng, keep_logits);
    }
    generator::PredictionEnsemble operator()(const baselines::EnsembleOfNets& e) const {
      return baselines::ensemble_predict(e, x, keep_logits);
    }
    generator::PredictionEnsemble operator()(const baselines::DropoutPredictor& d) const {
      return baselines::mc_dropout_predict(d, x, B, rng, keep_logits);
    }
  };
  return std::visit(Visitor{x, B, rng, keep_logits}, trained.model);
}

generator::PredictionEnsemble first_samples(const generator::PredictionEnsemble& ens, std::size_t b) {
  if (b == 0 || b > ens.replicates()) {
    throw ConfigError("requested " + std::to_string(b) + " samples from an ensemble of " +
                      std::to_string(ens.replicates()));
  }
  generator::PredictionEnsemble out(b, ens.inputs(), ens.output_dim(), ens.has_logits());
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t i = 0; i < ens.inputs(); ++i) {
      std::copy_n(ens.sample(r, i).begin(), ens.output_dim(), out.sample(r, i).begin());
      if (ens.has_logits()) std::copy_n(ens.logit(r, i).begin(), ens.output_dim(), out.logit(r, i).begin());
    }
  }
  return out;
}

}  // namespace neuboots::experiments
