#include "neuboots/generator/generator.hpp"

#include <atomic>
#include <string>

#include "neuboots/error.hpp"
#include "neuboots/simd/kernels.hpp"

namespace neuboots::generator {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_alpha(const GeneratorNet& g, const BootstrapAlpha& alpha) {
  if (alpha.size() != g.num_blocks()) {
    throw DimensionError("alpha has " + std::to_string(alpha.size()) + " entries but the generator has " +
                             std::to_string(g.num_blocks()) + " feature blocks",
                         g.net().num_layers() - 1);
  }
}

Matrix alpha_row(const BootstrapAlpha& alpha) { return Matrix(1, alpha.size(), alpha.alpha); }

}  // namespace

GeneratorNet::GeneratorNet(nn::DenseNet net, std::uint64_t assignment_seed)
    : net_(std::move(net)), assignment_seed_(assignment_seed), version_(next_version()) {
  if (net_.num_layers() < 2) {
    throw DimensionError("a generator needs a feature extractor and a head (at least two layers)");
  }
}

GeneratorNet GeneratorNet::initialize(const nn::ArchSpec& arch, Rng& rng) {
  if (arch.hidden.empty()) throw ConfigError("a generator needs at least one hidden layer");
  return GeneratorNet(nn::DenseNet::initialize(arch, rng));
}

nn::DenseNet& GeneratorNet::mutable_net() noexcept {
  version_ = next_version();
  return net_;
}

CachedFeatures cache_features(const GeneratorNet& g, const Matrix& x) {
  const auto layers = g.net().layers();
  if (x.cols() != g.net().input_dim()) {
    throw DimensionError("input has " + std::to_string(x.cols()) + " columns but layer 0 expects " +
                             std::to_string(g.net().input_dim()),
                         0);
  }
  Matrix pre;
  Matrix post = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Matrix next;
    nn::apply_layer(layers[l], post, pre, next);
    post = std::move(next);
  }
  return {std::move(post), g.version()};
}

HeadOutput head_forward(const GeneratorNet& g, const CachedFeatures& cache, const BootstrapAlpha& alpha) {
  if (cache.source_net_version != g.version()) {
    throw Error("cached features were computed by net version " +
                std::to_string(cache.source_net_version) + ", current version is " +
                std::to_string(g.version()));
  }
  check_alpha(g, alpha);
  const std::size_t m = cache.phi.rows();
  const std::size_t S = g.num_blocks();
  Matrix scaled(m, S);
  const auto& k = simd::active();
  for (std::size_t r = 0; r < m; ++r) {
    k.mul(cache.phi.row(r).data(), alpha.alpha.data(), scaled.row(r).data(), S);
  }
  HeadOutput out;
  Matrix pre;
  nn::apply_layer(g.head(), scaled, pre, out.logits);
  out.outputs = out.logits;
  nn::apply_output_head(g.net().head(), out.outputs);
  return out;
}

Matrix generator_forward(const GeneratorNet& g, const Matrix& x, const BootstrapAlpha& alpha) {
  check_alpha(g, alpha);
  const Matrix scale = alpha_row(alpha);
  return nn::forward(g.net(), x, {&scale});
}

Matrix generator_logits(const GeneratorNet& g, const Matrix& x, const BootstrapAlpha& alpha) {
  check_alpha(g, alpha);
  const Matrix scale = alpha_row(alpha);
  return nn::forward_logits(g.net(), x, {&scale});
}

nn::TrainTrace train(GeneratorNet& g, const nn::Dataset& data, const BlockAssignment& assignment,
                     const nn::SgdConfig& cfg, Rng& rng, const TrainOptions& opts) {
  if (assignment.num_blocks != g.num_blocks()) {
    throw DimensionError("assignment has " + std::to_string(assignment.num_blocks) +
                         " blocks but the generator has S = " + std::to_string(g.num_blocks()));
  }
  if (assignment.num_samples() != data.size()) {
    throw DimensionError("assignment covers " + std::to_string(assignment.num_samples()) +
                         " samples but the dataset has " + std::to_string(data.size()));
  }
  const nn::LossKind kind = opts.loss.value_or(data.is_classification() ? nn::LossKind::cross_entropy
                                                                         : nn::LossKind::mse);
  const std::size_t S = g.num_blocks();
  Matrix alpha(1, S, 1.0);
  std::vector<double> weights(data.size(), 1.0);

  nn::FitHooks hooks;
  hooks.on_epoch_begin = [&](std::size_t) {
    if (opts.freeze_alpha_to_one) return;
    BootstrapAlpha draw = bootstrap::sample_dirichlet_alpha(S, rng);
    weights = bootstrap::expand_weights(draw, assignment);
    alpha = alpha_row(draw);
  };
  hooks.on_batch = [&](nn::Batch& batch, Matrix& scale) {
    batch.weights.resize(batch.indices.size());
    for (std::size_t j = 0; j < batch.indices.size(); ++j) batch.weights[j] = weights[batch.indices[j]];
    scale = alpha;
  };
  return nn::fit(g.mutable_net(), data, kind, cfg, {}, hooks);
}

PredictionEnsemble::PredictionEnsemble(std::size_t replicates, std::size_t inputs,
                                       std::size_t output_dim, bool has_logits)
    : b_(replicates), m_(inputs), d_(output_dim), values_(replicates * inputs * output_dim, 0.0) {
  if (replicates == 0) throw ConfigError("number of bootstrap replicates must be positive");
  if (has_logits) logits_.assign(values_.size(), 0.0);
}

Matrix PredictionEnsemble::for_input(std::size_t i) const {
  Matrix out(b_, d_);
  for (std::size_t b = 0; b < b_; ++b) {
    const auto s = sample(b, i);
    std::copy(s.begin(), s.end(), out.row(b).begin());
  }
  return out;
}

Matrix PredictionEnsemble::logits_for_input(std::size_t i) const {
  if (!has_logits()) throw Error("ensemble was built without logits");
  Matrix out(b_, d_);
  for (std::size_t b = 0; b < b_; ++b) {
    const auto s = logit(b, i);
    std::copy(s.begin(), s.end(), out.row(b).begin());
  }
  return out;
}

Matrix PredictionEnsemble::mean() const {
  Matrix out(m_, d_);
  for (std::size_t b = 0; b < b_; ++b) {
    for (std::size_t i = 0; i < m_; ++i) simd::axpy(1.0, sample(b, i), out.row(i));
  }
  simd::scale(1.0 / static_cast<double>(b_), out.flat());
  return out;
}

namespace {

void store(PredictionEnsemble& ens, std::size_t b, const Matrix& outputs, const Matrix* logits) {
  for (std::size_t i = 0; i < outputs.rows(); ++i) {
    const auto o = outputs.row(i);
    std::copy(o.begin(), o.end(), ens.sample(b, i).begin());
    if (logits != nullptr) {
      const auto z = logits->row(i);
      std::copy(z.begin(), z.end(), ens.logit(b, i).begin());
    }
  }
}

}  // namespace

PredictionEnsemble predict_bootstrap(const GeneratorNet& g, const Matrix& x, std::size_t replicates,
                                     Rng& rng, bool keep_logits) {
  PredictionEnsemble ens(replicates, x.rows(), g.output_dim(), keep_logits);
  const CachedFeatures cache = cache_features(g, x);
  for (std::size_t b = 0; b < replicates; ++b) {
    const BootstrapAlpha alpha = bootstrap::sample_dirichlet_alpha(g.num_blocks(), rng);
    const HeadOutput h = head_forward(g, cache, alpha);
    store(ens, b, h.outputs, keep_logits ? &h.logits : nullptr);
  }
  return ens;
}

PredictionEnsemble predict_bootstrap_uncached(const GeneratorNet& g, const Matrix& x,
                                              std::size_t replicates, Rng& rng, bool keep_logits) {
  PredictionEnsemble ens(replicates, x.rows(), g.output_dim(), keep_logits);
  for (std::size_t b = 0; b < replicates; ++b) {
    const BootstrapAlpha alpha = bootstrap::sample_dirichlet_alpha(g.num_blocks(), rng);
    const Matrix scale = Matrix(1, alpha.size(), alpha.alpha);
    const nn::ForwardTrace t = nn::forward_trace(g.net(), x, {&scale});
    store(ens, b, t.outputs, keep_logits ? &t.post.back() : nullptr);
  }
  return ens;
}

PredictionEnsemble predict_unit_alpha(const GeneratorNet& g, const Matrix& x, std::size_t replicates) {
  PredictionEnsemble ens(replicates, x.rows(), g.output_dim(), true);
  const CachedFeatures cache = cache_features(g, x);
  const HeadOutput h = head_forward(g, cache, BootstrapAlpha::ones(g.num_blocks()));
  for (std::size_t b = 0; b < replicates; ++b) store(ens, b, h.outputs, &h.logits);
  return ens;
}

}  // namespace neuboots::generator
