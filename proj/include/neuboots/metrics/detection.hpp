#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace neuboots::metrics {

// In-distribution is the positive class and higher scores mean "more in".
// A threshold t labels a score positive when score >= t; the sweep visits
// +infinity and every distinct score.
struct DetectionMetrics {
  double tnr_at_tpr95 = 0.0;        // best TNR among thresholds with TPR >= 0.95
  double auroc = 0.0;               // trapezoid over the ROC points of the sweep
  double aupr_in = 0.0;             // average precision, in-distribution positive
  double aupr_out = 0.0;            // average precision, out positive, scores negated
  double detection_accuracy = 0.0;  // max over thresholds of (TPR + TNR) / 2
};

DetectionMetrics detection_metrics(std::span<const double> scores_in, std::span<const double> scores_out);

// Precision-weighted recall increments over the descending threshold sweep:
// sum_t (R_t - R_{t-1}) P_t.
double average_precision(std::span<const double> positive, std::span<const double> negative);

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};
// Sweep points from +infinity down to the smallest score.
std::vector<RocPoint> roc_sweep(std::span<const double> scores_in, std::span<const double> scores_out);

}  // namespace neuboots::metrics
