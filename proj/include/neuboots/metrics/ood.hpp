#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "neuboots/generator/generator.hpp"
#include "neuboots/matrix.hpp"

namespace neuboots::metrics {

// Natural-log entropy; 0 log 0 = 0.
double entropy(std::span<const double> p);

// Uncertainty statistics of one input's bootstrap ensemble.
struct OodFeatures {
  double max_predictive_mean = 0.0;  // max_k mean_b p_bk
  double logit_std = 0.0;            // mean_k of the sample std (B - 1) over b of logits
  double expected_entropy = 0.0;     // mean_b H(p_b)
  double predictive_entropy = 0.0;   // H(mean_b p_b)

  std::array<double, 4> as_array() const {
    return {max_predictive_mean, logit_std, expected_entropy, predictive_entropy};
  }
};

// probs and logits are [B x k], B >= 2.
OodFeatures ood_features(const Matrix& probs, const Matrix& logits);
// One feature vector per input; the ensemble must carry logits.
std::vector<OodFeatures> ood_features(const generator::PredictionEnsemble& ensemble);

// L2-regularized logistic regression on standardized features.
struct DetectorModel {
  std::vector<double> weights;        // in standardized feature space
  double bias = 0.0;
  std::vector<double> feature_mean;   // standardization fitted on the training split
  std::vector<double> feature_scale;
  std::size_t iterations = 0;
  double regularization = 0.0;
  double gradient_norm = 0.0;

  // Linear score w . z + b on standardized features.
  double linear_score(std::span<const double> features) const;
  // Predicted in-distribution probability.
  double score(std::span<const double> features) const;
};

struct DetectorOptions {
  double regularization = 1e-4;
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;
};

// Label 1 = in-distribution. Objective:
//   (1/m) sum_i [log(1 + e^{s_i}) - y_i s_i] + (lambda/2) |w|^2,  s_i = w . z_i + b
// minimized by damped Newton steps until |grad| < tolerance or max_iterations.
// Rows of both matrices are feature vectors of equal width.
DetectorModel fit_detector(const Matrix& features_in, const Matrix& features_out,
                           const DetectorOptions& opts = {});

// Objective and gradient of the detector fit at (weights, bias), on already
// standardized rows; exposed for independent optimizers in tests.
struct LogisticObjective {
  double value = 0.0;
  std::vector<double> gradient;  // weights then bias
};
LogisticObjective logistic_objective(const Matrix& z, std::span<const double> y,
                                     std::span<const double> weights, double bias, double lambda);

Matrix features_matrix(std::span<const OodFeatures> features);

// Standardization the detector applies, fitted on the pooled rows.
void standardization(const Matrix& pooled, std::vector<double>& mean, std::vector<double>& scale);

}  // namespace neuboots::metrics
