#include "neuboots/metrics/ood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuboots/error.hpp"

namespace neuboots::metrics {

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

namespace {

// Column means as offsets from row 0, so identical rows average exactly.
std::vector<double> column_mean(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += m(r, j) - m(0, j);
  }
  for (std::size_t j = 0; j < m.cols(); ++j) mean[j] = m(0, j) + mean[j] / static_cast<double>(m.rows());
  return mean;
}

}  // namespace

OodFeatures ood_features(const Matrix& probs, const Matrix& logits) {
  if (probs.rows() < 2) throw ConfigError("OOD features need at least two bootstrap samples");
  if (probs.rows() != logits.rows() || probs.cols() != logits.cols()) {
    throw DimensionError("probability and logit ensembles differ in shape");
  }
  const std::size_t B = probs.rows();
  const std::size_t k = probs.cols();
  OodFeatures f;

  const auto mean_p = column_mean(probs);
  f.max_predictive_mean = *std::max_element(mean_p.begin(), mean_p.end());
  f.predictive_entropy = entropy(mean_p);

  double eh = 0.0;
  for (std::size_t b = 0; b < B; ++b) eh += entropy(probs.row(b));
  f.expected_entropy = eh / static_cast<double>(B);

  const auto mean_z = column_mean(logits);
  double std_sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double ss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double d = logits(b, j) - mean_z[j];
      ss += d * d;
    }
    std_sum += std::sqrt(ss / static_cast<double>(B - 1));
  }
  f.logit_std = std_sum / static_cast<double>(k);
  return f;
}

std::vector<OodFeatures> ood_features(const generator::PredictionEnsemble& ensemble) {
  std::vector<OodFeatures> out;
  out.reserve(ensemble.inputs());
  for (std::size_t i = 0; i < ensemble.inputs(); ++i) {
    out.push_back(ood_features(ensemble.for_input(i), ensemble.logits_for_input(i)));
  }
  return out;
}

Matrix features_matrix(std::span<const OodFeatures> features) {
  Matrix m(features.size(), 4);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto a = features[i].as_array();
    std::copy(a.begin(), a.end(), m.row(i).begin());
  }
  return m;
}

void standardization(const Matrix& pooled, std::vector<double>& mean, std::vector<double>& scale) {
  const std::size_t d = pooled.cols();
  const double m = static_cast<double>(pooled.rows());
  mean.assign(d, 0.0);
  scale.assign(d, 1.0);
  for (std::size_t r = 0; r < pooled.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += pooled(r, j);
  }
  for (double& v : mean) v /= m;
  for (std::size_t j = 0; j < d; ++j) {
    double ss = 0.0;
    for (std::size_t r = 0; r < pooled.rows(); ++r) {
      const double diff = pooled(r, j) - mean[j];
      ss += diff * diff;
    }
    const double sd = std::sqrt(ss / m);
    scale[j] = sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
  }
}

double DetectorModel::linear_score(std::span<const double> features) const {
  if (features.size() != weights.size()) throw DimensionError("detector feature width mismatch");
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    s += weights[j] * (features[j] - feature_mean[j]) / feature_scale[j];
  }
  return s;
}

double DetectorModel::score(std::span<const double> features) const {
  const double s = linear_score(features);
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

namespace {

// log(1 + e^s) without overflow.
double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Solves A x = b in place (Gaussian elimination, partial pivoting).
std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
      std::swap(b[col], b[piv]);
    }
    const double d = a(col, col);
    if (d == 0.0) throw NumericalError("singular Newton system", {});
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / d;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

}  // namespace

LogisticObjective logistic_objective(const Matrix& z, std::span<const double> y,
                                     std::span<const double> weights, double bias, double lambda) {
  const std::size_t d = z.cols();
  const double m = static_cast<double>(z.rows());
  LogisticObjective out;
  out.gradient.assign(d + 1, 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double s = bias;
    for (std::size_t j = 0; j < d; ++j) s += weights[j] * z(i, j);
    out.value += softplus(s) - y[i] * s;
    const double r = sigmoid(s) - y[i];
    for (std::size_t j = 0; j < d; ++j) out.gradient[j] += r * z(i, j);
    out.gradient[d] += r;
  }
  out.value /= m;
  for (double& g : out.gradient) g /= m;
  for (std::size_t j = 0; j < d; ++j) {
    out.value += 0.5 * lambda * weights[j] * weights[j];
    out.gradient[j] += lambda * weights[j];
  }
  return out;
}

DetectorModel fit_detector(const Matrix& features_in, const Matrix& features_out,
                           const DetectorOptions& opts) {
  if (features_in.rows() == 0 || features_out.rows() == 0) {
    throw DataError("detector needs both in- and out-of-distribution samples");
  }
  if (features_in.cols() != features_out.cols()) throw DimensionError("feature widths differ");
  const std::size_t d = features_in.cols();
  const std::size_t m = features_in.rows() + features_out.rows();

  Matrix pooled(m, d);
  std::vector<double> y(m);
  for (std::size_t i = 0; i < features_in.rows(); ++i) {
    std::copy(features_in.row(i).begin(), features_in.row(i).end(), pooled.row(i).begin());
    y[i] = 1.0;
  }
  for (std::size_t i = 0; i < features_out.rows(); ++i) {
    const std::size_t r = features_in.rows() + i;
    std::copy(features_out.row(i).begin(), features_out.row(i).end(), pooled.row(r).begin());
    y[r] = 0.0;
  }
  for (double v : pooled.flat()) {
    if (!std::isfinite(v)) throw DataError("non-finite detector feature");
  }

  DetectorModel model;
  model.regularization = opts.regularization;
  standardization(pooled, model.feature_mean, model.feature_scale);
  Matrix z(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) z(i, j) = (pooled(i, j) - model.feature_mean[j]) / model.feature_scale[j];
  }

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  const double lambda = opts.regularization;
  LogisticObjective obj = logistic_objective(z, y, w, b, lambda);
  std::size_t iter = 0;
  while (iter < opts.max_iterations && norm(obj.gradient) >= opts.tolerance) {
    // Hessian: (1/m) sum p(1-p) [z 1][z 1]^T + lambda on the weight block.
    Matrix h(d + 1, d + 1);
    for (std::size_t i = 0; i < m; ++i) {
      double s = b;
      for (std::size_t j = 0; j < d; ++j) s += w[j] * z(i, j);
      const double p = sigmoid(s);
      const double c = p * (1.0 - p) / static_cast<double>(m);
      for (std::size_t a = 0; a <= d; ++a) {
        const double za = a < d ? z(i, a) : 1.0;
        for (std::size_t e = 0; e <= d; ++e) h(a, e) += c * za * (e < d ? z(i, e) : 1.0);
      }
    }
    for (std::size_t j = 0; j < d; ++j) h(j, j) += lambda;
    h(d, d) += 1e-12;

    std::vector<double> step = solve(h, obj.gradient);
    // Backtracking keeps the objective monotone when curvature vanishes.
    double t = 1.0;
    LogisticObjective next;
    std::vector<double> w_new(d);
    double b_new = b;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j < d; ++j) w_new[j] = w[j] - t * step[j];
      b_new = b - t * step[d];
      next = logistic_objective(z, y, w_new, b_new, lambda);
      if (next.value <= obj.value) break;
      t *= 0.5;
    }
    if (!(next.value <= obj.value)) break;
    w = w_new;
    b = b_new;
    obj = std::move(next);
    ++iter;
  }

  model.weights = w;
  model.bias = b;
  model.iterations = iter;
  model.gradient_norm = norm(obj.gradient);
  for (double v : model.weights) {
    if (!std::isfinite(v)) throw NumericalError("detector weights diverged", {});
  }
  return model;
}

}  // namespace neuboots::metrics
