#include "neuboots/metrics/diversity.hpp"

#include <cmath>

#include "neuboots/error.hpp"

namespace neuboots::metrics {

PairContingency pair_contingency(std::span<const std::size_t> first, std::span<const std::size_t> second,
                                 std::span<const std::size_t> truth) {
  if (first.size() != truth.size() || second.size() != truth.size()) {
    throw DimensionError("member predictions and truth differ in length");
  }
  PairContingency c;
  c.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a = first[i] == truth[i];
    const bool b = second[i] == truth[i];
    if (a && b) {
      ++c.both_correct;
    } else if (a) {
      ++c.first_only;
    } else if (b) {
      ++c.second_only;
    } else {
      ++c.both_wrong;
    }
    if (first[i] != second[i]) ++c.label_disagreements;
  }
  return c;
}

std::optional<double> ratio_error(const PairContingency& c) {
  if (c.both_wrong == 0) return std::nullopt;
  return 100.0 * static_cast<double>(c.first_only + c.second_only) / static_cast<double>(c.both_wrong);
}

std::optional<double> q_statistic(const PairContingency& c) {
  const double agree = static_cast<double>(c.both_correct) * static_cast<double>(c.both_wrong);
  const double differ = static_cast<double>(c.second_only) * static_cast<double>(c.first_only);
  if (agree + differ == 0.0) return std::nullopt;
  return (agree - differ) / (agree + differ);
}

std::optional<double> correlation(const PairContingency& c) {
  const double n11 = static_cast<double>(c.both_correct);
  const double n10 = static_cast<double>(c.first_only);
  const double n01 = static_cast<double>(c.second_only);
  const double n00 = static_cast<double>(c.both_wrong);
  const double denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00);
  if (denom == 0.0) return std::nullopt;
  return (n11 * n00 - n01 * n10) / std::sqrt(denom);
}

double disagreement(const PairContingency& c) {
  if (c.total == 0) return 0.0;
  return static_cast<double>(c.label_disagreements) / static_cast<double>(c.total);
}

DiversityReport diversity(std::span<const std::vector<std::size_t>> member_predictions,
                          std::span<const std::size_t> truth) {
  if (member_predictions.size() < 2) throw ConfigError("diversity needs at least two members");
  DiversityReport r;
  double ratio_sum = 0.0, q_sum = 0.0, corr_sum = 0.0, dis_sum = 0.0;
  std::size_t ratio_n = 0, q_n = 0, corr_n = 0;
  for (std::size_t a = 0; a < member_predictions.size(); ++a) {
    for (std::size_t b = a + 1; b < member_predictions.size(); ++b) {
      const auto c = pair_contingency(member_predictions[a], member_predictions[b], truth);
      ++r.pairs;
      dis_sum += disagreement(c);
      if (const auto v = ratio_error(c)) {
        ratio_sum += *v;
        ++ratio_n;
      } else {
        ++r.ratio_error_skipped;
      }
      if (const auto v = q_statistic(c)) {
        q_sum += *v;
        ++q_n;
      } else {
        ++r.q_statistic_skipped;
      }
      if (const auto v = correlation(c)) {
        corr_sum += *v;
        ++corr_n;
      } else {
        ++r.correlation_skipped;
      }
    }
  }
  r.disagreement = dis_sum / static_cast<double>(r.pairs);
  if (ratio_n > 0) r.ratio_error = ratio_sum / static_cast<double>(ratio_n);
  if (q_n > 0) r.q_statistic = q_sum / static_cast<double>(q_n);
  if (corr_n > 0) r.correlation = corr_sum / static_cast<double>(corr_n);
  return r;
}

}  // namespace neuboots::metrics
