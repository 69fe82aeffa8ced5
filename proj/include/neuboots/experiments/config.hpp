#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "neuboots/experiments/synth.hpp"
#include "neuboots/io/csv.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "neuboots/nn/sgd.hpp"

namespace neuboots::experiments {

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind { regression_coverage, calibration, active_learning, ood, imbalanced, bench_speed };

ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(ExperimentKind k) noexcept;

// Uncertainty methods a run can compare.
//   baseline            plain network, one deterministic prediction
//   neuboots            bootstrap generator, B alpha draws
//   mc_dropout          dropout before the final layer, B stochastic passes
//   standard_bootstrap  `members` nets on resampled data
//   rwb                 `members` nets on Dirichlet-weighted losses
//   deep_ensemble       `members` independently initialized nets
enum class Method { baseline, neuboots, mc_dropout, standard_bootstrap, rwb, deep_ensemble };

Method parse_method(std::string_view name);
std::string_view to_string(Method m) noexcept;

struct DatasetSpec {
  // "synthetic" or "csv"
  std::string source = "synthetic";
  std::string generator = "sine";
  std::size_t n = 500;
  std::size_t test_n = 1000;
  double noise_sd = 0.3;  // regression generators
  ClassificationParams classification;
  std::string csv_path;
  std::string test_csv_path;
  io::CsvSchema schema;
};

struct ModelSpec {
  std::vector<std::size_t> hidden{64, 64};
  nn::Activation activation = nn::Activation::relu;
};

struct CoverageParams {
  std::size_t replications = 100;
  std::size_t grid_points = 50;
  double grid_lower = -2.5;
  double grid_upper = 2.5;
  double level = 0.95;
  // Standard bootstrap reference: members per band and replications
  // (0 = same as `replications`).
  std::size_t baseline_members = 50;
  std::size_t baseline_replications = 0;
  // Epochs and initial learning rate for ensemble baselines (0 = as in sgd).
  std::size_t baseline_epochs = 0;
  double baseline_learning_rate = 0.0;
};

struct CalibrationParams {
  std::size_t ece_bins = 15;
  // NeuBoots test error at each B, using the first B draws.
  std::vector<std::size_t> bagging_b{1, 5, 25};
};

struct ActiveLearningParams {
  std::size_t initial = 20;
  std::size_t query = 10;
  std::size_t stages = 8;
  std::size_t pool = 500;
  std::vector<std::string> acquisitions{"entropy", "random"};
};

struct OodParams {
  // Added to every feature coordinate of the out-distribution copy.
  double shift = 10.0;
  std::size_t n_in = 400;
  std::size_t n_out = 400;
  // Fraction of the in/out rows used to fit the detector; the rest is scored.
  double validation_fraction = 0.5;
  std::vector<std::size_t> b_sweep{2, 5, 10, 20, 30};
};

struct BenchParams {
  std::size_t depth = 8;     // hidden layers of the feature extractor
  std::size_t width = 128;   // hidden width, so S = width
  std::size_t input_dim = 32;
  std::size_t output_dim = 10;
  std::size_t inputs = 256;
  std::vector<std::size_t> b_values{1, 100};
  std::size_t repeats = 5;
  std::size_t train_n = 1024;
  std::size_t train_epochs = 3;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ExperimentKind kind = ExperimentKind::regression_coverage;
  DatasetSpec dataset;
  ModelSpec model;
  std::vector<Method> methods{Method::neuboots};
  std::size_t B = 5;
  nn::SgdConfig sgd;
  double dropout_p = 0.1;
  std::size_t ensemble_members = 5;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "neuboots-run";
  // Worker threads, 0 = hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;

  CoverageParams coverage;
  CalibrationParams calibration;
  ActiveLearningParams active_learning;
  OodParams ood;
  BenchParams bench;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

// Defaults suited to each experiment kind.
ExperimentConfig default_config(ExperimentKind kind);

// Only the parameter section of the config's kind is written.
nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing fields take default_config(kind) values; unknown keys and a
// missing or different schema_version are ConfigErrors.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

// FNV-1a (64-bit) of the canonical JSON form, excluding output_dir and
// threads, which do not affect results. 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace neuboots::experiments
