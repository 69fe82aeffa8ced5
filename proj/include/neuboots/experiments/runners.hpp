#pragma once

#include <cstdint>
#include <vector>

#include "neuboots/experiments/config.hpp"
#include "neuboots/experiments/run_record.hpp"
#include "neuboots/nn/dataset.hpp"

namespace neuboots::experiments {

// Each runner requires cfg.kind to match (ConfigError otherwise). Work fans
// out over seeds (and replications) on cfg.threads workers; tables come back
// sorted by seed. Training failures surface as NumericalError annotated with
// the replication (coverage) or seed index.

// Tables: coverage_per_point, coverage_summary.
RunRecord run_regression_coverage(const ExperimentConfig& cfg);
// Tables: calibration, reliability, bagging (NeuBoots test error by B).
RunRecord run_calibration(const ExperimentConfig& cfg);
// Tables: learning_curve, active_learning_summary.
RunRecord run_active_learning(const ExperimentConfig& cfg);
// Tables: ood_detection, ood_features.
RunRecord run_ood(const ExperimentConfig& cfg);
// Tables: per_class_f1.
RunRecord run_imbalanced(const ExperimentConfig& cfg);
// Tables: cache_check. Speeds and overheads are timings.
RunRecord run_bench_speed(const ExperimentConfig& cfg);

RunRecord run_experiment(const ExperimentConfig& cfg);

struct Split {
  nn::Dataset train;
  nn::Dataset test;
};

// Train/test data of the classification kinds for one seed. Synthetic test
// sets are fresh draws from the same generator (imbalanced_gaussians is
// tested on balanced gaussians); CSV data without a test file holds out 30%.
Split classification_split(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t n_train);

struct BenchResult {
  std::size_t B = 0;
  double cache_max_abs_diff = 0.0;
  double cached_seconds = 0.0;      // predict_bootstrap
  double uncached_seconds = 0.0;    // B full generator passes
  double mc_dropout_seconds = 0.0;  // B full stochastic passes
};

struct TrainingOverhead {
  double plain_epoch_seconds = 0.0;
  double neuboots_epoch_seconds = 0.0;
  double overhead() const { return neuboots_epoch_seconds / plain_epoch_seconds - 1.0; }
};

// Median wall-clock times over `repeats`. Throws NumericalError if cached
// and uncached predictions differ by more than 1e-12 (checked before timing).
std::vector<BenchResult> bench_prediction(const BenchParams& p, double dropout_p, std::uint64_t seed);
TrainingOverhead bench_training(const BenchParams& p, const nn::SgdConfig& sgd, std::uint64_t seed);

}  // namespace neuboots::experiments
