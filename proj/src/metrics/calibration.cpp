#include "neuboots/metrics/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuboots/error.hpp"
#include "neuboots/nn/loss.hpp"

namespace neuboots::metrics {

namespace {

void check(const Matrix& probs, std::span<const std::size_t> labels) {
  if (probs.rows() == 0) throw DataError("calibration metrics need at least one prediction");
  if (probs.rows() != labels.size()) {
    throw DimensionError(std::to_string(probs.rows()) + " predictions but " +
                         std::to_string(labels.size()) + " labels");
  }
  for (std::size_t c : labels) {
    if (c >= probs.cols()) throw DimensionError("label exceeds number of classes");
  }
}

double edge(std::size_t b, std::size_t n_bins) {
  return static_cast<double>(b) / static_cast<double>(n_bins);
}

// b with edge(b) < confidence <= edge(b + 1), judged against the same edge
// values the bins report.
std::size_t bin_of(double confidence, std::size_t n_bins) {
  const double c = std::ceil(confidence * static_cast<double>(n_bins));
  std::size_t b = c <= 1.0 ? 0 : std::min(static_cast<std::size_t>(c) - 1, n_bins - 1);
  while (b > 0 && confidence <= edge(b, n_bins)) --b;
  while (b + 1 < n_bins && confidence > edge(b + 1, n_bins)) ++b;
  return b;
}

}  // namespace

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

std::vector<std::size_t> argmax_rows(const Matrix& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = argmax(probs.row(i));
  return out;
}

std::vector<BinStat> reliability_bins(const Matrix& probs, std::span<const std::size_t> labels,
                                      std::size_t n_bins) {
  check(probs, labels);
  if (n_bins == 0) throw ConfigError("ECE needs at least one bin");
  std::vector<BinStat> bins(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0);
  std::vector<double> correct(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lower = edge(b, n_bins);
    bins[b].upper = edge(b + 1, n_bins);
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    const std::size_t pred = argmax(row);
    const std::size_t b = bin_of(row[pred], n_bins);
    ++bins[b].count;
    conf_sum[b] += row[pred];
    if (pred == labels[i]) correct[b] += 1.0;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins[b].count == 0) continue;
    const double n = static_cast<double>(bins[b].count);
    bins[b].confidence_mean = conf_sum[b] / n;
    bins[b].accuracy = correct[b] / n;
  }
  return bins;
}

double ece(const Matrix& probs, std::span<const std::size_t> labels, std::size_t n_bins) {
  const auto bins = reliability_bins(probs, labels, n_bins);
  const double m = static_cast<double>(probs.rows());
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    total += (static_cast<double>(b.count) / m) * std::abs(b.accuracy - b.confidence_mean);
  }
  return total;
}

double nll(const Matrix& probs, std::span<const std::size_t> labels) {
  check(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    total -= std::log(std::max(probs(i, labels[i]), nn::kLogProbFloor));
  }
  return total / static_cast<double>(probs.rows());
}

double brier(const Matrix& probs, std::span<const std::size_t> labels) {
  check(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      const double d = probs(i, j) - (j == labels[i] ? 1.0 : 0.0);
      total += d * d;
    }
  }
  return total / static_cast<double>(probs.rows());
}

double error_rate(const Matrix& probs, std::span<const std::size_t> labels) {
  check(probs, labels);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (argmax(probs.row(i)) != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(probs.rows());
}

CalibrationReport calibration_report(const Matrix& probs, std::span<const std::size_t> labels,
                                     std::size_t n_bins) {
  CalibrationReport r;
  r.error_rate = 100.0 * error_rate(probs, labels);
  r.ece = 100.0 * ece(probs, labels, n_bins);
  r.nll = nll(probs, labels);
  r.brier = 100.0 * brier(probs, labels);
  r.bin_stats = reliability_bins(probs, labels, n_bins);
  return r;
}

}  // namespace neuboots::metrics
