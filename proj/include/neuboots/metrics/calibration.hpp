#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuboots/matrix.hpp"

namespace neuboots::metrics {

inline constexpr std::size_t kDefaultEceBins = 15;

// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> row);
std::vector<std::size_t> argmax_rows(const Matrix& probs);

// Expected calibration error as a fraction in [0, 1]. Confidence is the max
// probability; bins are equal-width on [0, 1], bin b holding confidences in
// (b/n_bins, (b+1)/n_bins] (bin 0 also takes exactly 0).
double ece(const Matrix& probs, std::span<const std::size_t> labels, std::size_t n_bins = kDefaultEceBins);
// -mean log max(p_true, 1e-12)
double nll(const Matrix& probs, std::span<const std::size_t> labels);
// mean_i sum_k (p_ik - onehot_ik)^2, in [0, 2]
double brier(const Matrix& probs, std::span<const std::size_t> labels);
// Fraction of rows whose argmax differs from the label.
double error_rate(const Matrix& probs, std::span<const std::size_t> labels);

struct BinStat {
  double lower = 0.0;
  double upper = 0.0;
  double confidence_mean = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Scaled as reported: error_rate and ece in percent, brier x100 (so in
// [0, 200]), nll in nats. bin_stats is the reliability-diagram data.
struct CalibrationReport {
  double error_rate = 0.0;
  double ece = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  std::vector<BinStat> bin_stats;
};

std::vector<BinStat> reliability_bins(const Matrix& probs, std::span<const std::size_t> labels,
                                      std::size_t n_bins = kDefaultEceBins);
CalibrationReport calibration_report(const Matrix& probs, std::span<const std::size_t> labels,
                                     std::size_t n_bins = kDefaultEceBins);

}  // namespace neuboots::metrics
