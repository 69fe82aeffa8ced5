#include "neuboots/metrics/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neuboots/error.hpp"

namespace neuboots::metrics {

namespace {

struct Scored {
  double score;
  bool positive;
};

std::vector<Scored> descending(std::span<const double> positive, std::span<const double> negative) {
  std::vector<Scored> all;
  all.reserve(positive.size() + negative.size());
  for (double s : positive) all.push_back({s, true});
  for (double s : negative) all.push_back({s, false});
  for (const auto& s : all) {
    if (std::isnan(s.score)) throw DataError("detection scores must not be NaN");
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  return all;
}

void check_nonempty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("detection metrics need both score sets nonempty");
}

}  // namespace

std::vector<RocPoint> roc_sweep(std::span<const double> scores_in, std::span<const double> scores_out) {
  check_nonempty(scores_in, scores_out);
  const auto all = descending(scores_in, scores_out);
  const double np = static_cast<double>(scores_in.size());
  const double nn = static_cast<double>(scores_out.size());
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].score;
    while (i < all.size() && all[i].score == t) {
      all[i].positive ? ++tp : ++fp;
      ++i;
    }
    pts.push_back({t, static_cast<double>(tp) / np, static_cast<double>(fp) / nn});
  }
  return pts;
}

double average_precision(std::span<const double> positive, std::span<const double> negative) {
  check_nonempty(positive, negative);
  const auto all = descending(positive, negative);
  const double np = static_cast<double>(positive.size());
  std::size_t tp = 0, fp = 0;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].score;
    while (i < all.size() && all[i].score == t) {
      all[i].positive ? ++tp : ++fp;
      ++i;
    }
    const double recall = static_cast<double>(tp) / np;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

DetectionMetrics detection_metrics(std::span<const double> scores_in, std::span<const double> scores_out) {
  const auto pts = roc_sweep(scores_in, scores_out);
  DetectionMetrics m;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (i > 0) {
      const auto& q = pts[i - 1];
      m.auroc += (p.fpr - q.fpr) * (p.tpr + q.tpr) / 2.0;
    }
    if (p.tpr >= 0.95) m.tnr_at_tpr95 = std::max(m.tnr_at_tpr95, 1.0 - p.fpr);
    m.detection_accuracy = std::max(m.detection_accuracy, 0.5 * (p.tpr + 1.0 - p.fpr));
  }
  m.aupr_in = average_precision(scores_in, scores_out);
  std::vector<double> neg_in(scores_in.begin(), scores_in.end());
  std::vector<double> neg_out(scores_out.begin(), scores_out.end());
  for (double& v : neg_in) v = -v;
  for (double& v : neg_out) v = -v;
  m.aupr_out = average_precision(neg_out, neg_in);
  return m;
}

}  // namespace neuboots::metrics
