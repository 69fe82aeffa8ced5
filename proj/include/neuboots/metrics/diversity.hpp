#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace neuboots::metrics {

// Joint correctness of two members over the same inputs.
struct PairContingency {
  std::size_t both_correct = 0;     // N11
  std::size_t first_only = 0;       // N10: first right, second wrong
  std::size_t second_only = 0;      // N01
  std::size_t both_wrong = 0;       // N00
  std::size_t label_disagreements = 0;
  std::size_t total = 0;
};

PairContingency pair_contingency(std::span<const std::size_t> first, std::span<const std::size_t> second,
                                 std::span<const std::size_t> truth);

// Pair values; nullopt where the denominator is zero.
//   ratio_error  = 100 (N10 + N01) / N00
//   q_statistic  = (N11 N00 - N01 N10) / (N11 N00 + N01 N10)
//   correlation  = (N11 N00 - N01 N10) / sqrt((N11+N10)(N01+N00)(N11+N01)(N10+N00))
//   disagreement = fraction of inputs with different predicted labels
std::optional<double> ratio_error(const PairContingency& c);
std::optional<double> q_statistic(const PairContingency& c);
std::optional<double> correlation(const PairContingency& c);
double disagreement(const PairContingency& c);

// Means over all member pairs. A pair with a zero denominator is left out of
// that metric's mean and counted in the matching *_skipped field; a metric
// with no valid pair is nullopt.
struct DiversityReport {
  std::optional<double> ratio_error;
  std::optional<double> q_statistic;
  std::optional<double> correlation;
  double disagreement = 0.0;
  std::size_t pairs = 0;
  std::size_t ratio_error_skipped = 0;
  std::size_t q_statistic_skipped = 0;
  std::size_t correlation_skipped = 0;
};

// member_predictions[b][i]: hard label of member b on input i. Needs >= 2 members.
DiversityReport diversity(std::span<const std::vector<std::size_t>> member_predictions,
                          std::span<const std::size_t> truth);

}  // namespace neuboots::metrics
