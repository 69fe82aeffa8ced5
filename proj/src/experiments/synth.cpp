#include "neuboots/experiments/synth.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "neuboots/error.hpp"

namespace neuboots::experiments {

RegressionFunction parse_regression_function(std::string_view name) {
  if (name == "sine") return RegressionFunction::sine;
  if (name == "step") return RegressionFunction::step;
  if (name == "bumps") return RegressionFunction::bumps;
  if (name == "linear") return RegressionFunction::linear;
  throw ConfigError("unknown regression function \"" + std::string(name) +
                    "\" (choices: sine, step, bumps, linear)");
}

std::string_view to_string(RegressionFunction f) noexcept {
  switch (f) {
    case RegressionFunction::sine: return "sine";
    case RegressionFunction::step: return "step";
    case RegressionFunction::bumps: return "bumps";
    case RegressionFunction::linear: return "linear";
  }
  return "?";
}

double true_function(RegressionFunction f, double x) noexcept {
  switch (f) {
    case RegressionFunction::sine: return std::sin(x);
    case RegressionFunction::step: return x < 0.0 ? -0.5 : 0.5;
    case RegressionFunction::bumps:
      return std::exp(-2.0 * (x + 1.5) * (x + 1.5)) - std::exp(-2.0 * (x - 1.5) * (x - 1.5)) +
             0.8 * std::exp(-8.0 * x * x);
    case RegressionFunction::linear: return 0.5 * x + 0.2;
  }
  return 0.0;
}

RegressionSample synth_regression(std::string_view name, std::size_t n, double noise_sd, Rng& rng) {
  const auto fn = parse_regression_function(name);
  if (n < 10) throw ConfigError("synthetic regression needs n >= 10, got " + std::to_string(n));
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be finite and >= 0");
  Matrix x(n, 1);
  Matrix y(n, 1);
  std::vector<double> truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(kRegressionLower, kRegressionUpper);
    truth[i] = true_function(fn, x(i, 0));
    y(i, 0) = noise_sd == 0.0 ? truth[i] : truth[i] + noise_sd * rng.normal();
  }
  return {nn::Dataset::regression(std::move(x), std::move(y)), fn, std::move(truth)};
}

std::vector<std::vector<double>> gaussian_class_means(const ClassificationParams& params) {
  const std::size_t k = params.num_classes;
  std::vector<std::vector<double>> means(k, std::vector<double>(params.dim, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
    means[c][0] = params.separation * std::cos(angle);
    if (params.dim > 1) means[c][1] = params.separation * std::sin(angle);
  }
  return means;
}

namespace {

std::vector<std::size_t> balanced_counts(std::size_t n, std::size_t k) {
  std::vector<std::size_t> counts(k, n / k);
  for (std::size_t c = 0; c < n % k; ++c) ++counts[c];
  return counts;
}

void check_params(const ClassificationParams& p) {
  if (!(p.noise >= 0.0) || !std::isfinite(p.noise)) throw ConfigError("noise must be finite and >= 0");
  if (!(p.label_noise >= 0.0 && p.label_noise <= 1.0)) throw ConfigError("label_noise must be in [0, 1]");
  if (!std::isfinite(p.separation) || !std::isfinite(p.shift)) {
    throw ConfigError("separation and shift must be finite");
  }
}

}  // namespace

nn::Dataset synth_classification(std::string_view name, std::size_t n, const ClassificationParams& params,
                                 Rng& rng) {
  check_params(params);
  std::vector<std::size_t> counts;
  std::size_t dim = 2;
  const bool moons = name == "two_moons";
  if (moons) {
    if (params.num_classes != 2) throw ConfigError("two_moons has exactly 2 classes");
    counts = balanced_counts(n, 2);
  } else if (name == "gaussians" || name == "imbalanced_gaussians") {
    if (params.num_classes < 2) throw ConfigError("gaussians needs num_classes >= 2");
    if (params.dim < 1) throw ConfigError("gaussians needs dim >= 1");
    dim = params.dim;
    if (name == "gaussians") {
      counts = balanced_counts(n, params.num_classes);
    } else {
      if (params.counts.size() != params.num_classes) {
        throw ConfigError("imbalanced_gaussians: count vector has " + std::to_string(params.counts.size()) +
                          " entries but num_classes is " + std::to_string(params.num_classes));
      }
      counts = params.counts;
    }
  } else {
    throw ConfigError("unknown classification generator \"" + std::string(name) +
                      "\" (choices: two_moons, gaussians, imbalanced_gaussians)");
  }
  for (std::size_t c : counts) {
    if (c == 0) throw ConfigError("every class needs at least one sample");
  }

  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  const std::size_t k = counts.size();
  const auto means = gaussian_class_means(params);
  Matrix x(total, dim);
  std::vector<std::size_t> labels(total);
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < counts[c]; ++j, ++row) {
      labels[row] = c;
      if (moons) {
        const double t = rng.uniform(0.0, std::numbers::pi);
        if (c == 0) {
          x(row, 0) = std::cos(t);
          x(row, 1) = std::sin(t);
        } else {
          x(row, 0) = 1.0 - std::cos(t);
          x(row, 1) = 0.5 - std::sin(t) - params.separation;
        }
        for (std::size_t d = 0; d < 2; ++d) x(row, d) += params.noise * rng.normal();
      } else {
        for (std::size_t d = 0; d < dim; ++d) x(row, d) = means[c][d] + params.noise * rng.normal();
      }
      for (std::size_t d = 0; d < dim; ++d) x(row, d) += params.shift;
    }
  }
  if (params.label_noise > 0.0) {
    for (auto& label : labels) {
      if (rng.bernoulli(params.label_noise)) {
        const std::size_t other = rng.below(k - 1);
        label = other >= label ? other + 1 : other;
      }
    }
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  return nn::Dataset::classification(x.select_rows(order), [&] {
    std::vector<std::size_t> shuffled(total);
    for (std::size_t i = 0; i < total; ++i) shuffled[i] = labels[order[i]];
    return shuffled;
  }(), k);
}

}  // namespace neuboots::experiments
