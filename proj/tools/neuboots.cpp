// neuboots: train and query bootstrap models, run experiments and benchmarks.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neuboots/baselines/baselines.hpp"
#include "neuboots/error.hpp"
#include "neuboots/experiments/methods.hpp"
#include "neuboots/experiments/runners.hpp"
#include "neuboots/generator/band.hpp"
#include "neuboots/io/csv.hpp"
#include "neuboots/io/model_io.hpp"
#include "neuboots/metrics/ood.hpp"
#include "neuboots/simd/kernels.hpp"

namespace nb = neuboots;
namespace ex = neuboots::experiments;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Optional overrides shared by `experiment` and `bench`.
struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> B, epochs, batch_size, threads, replications;
  std::optional<double> learning_rate;
  std::string output_dir;

  void add_to(CLI::App* app) {
    app->add_option("--seeds", seeds, "Seed list (overrides the config)")->delimiter(',');
    app->add_option("--B", B, "Bootstrap samples per prediction");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--batch-size", batch_size, "Mini-batch size");
    app->add_option("--lr", learning_rate, "Initial learning rate");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    app->add_option("--replications", replications, "Coverage replications (regression_coverage)");
    app->add_option("--output-dir", output_dir, "Directory for tables and the run record");
  }

  void apply(ex::ExperimentConfig& cfg) const {
    if (!seeds.empty()) cfg.seeds = seeds;
    if (B) cfg.B = *B;
    if (epochs) cfg.sgd.epochs = *epochs;
    if (batch_size) cfg.sgd.batch_size = *batch_size;
    if (learning_rate) cfg.sgd.learning_rate = *learning_rate;
    if (threads) cfg.threads = *threads;
    if (replications) cfg.coverage.replications = *replications;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    cfg.validate();
  }
};

int run_experiment_command(const std::string& kind_name, const std::string& config_path, const Overrides& o) {
  const auto kind = ex::parse_experiment_kind(kind_name);
  ex::ExperimentConfig cfg = config_path.empty() ? ex::default_config(kind) : ex::load_config(config_path);
  if (cfg.kind != kind) {
    throw nb::ConfigError("config file describes a \"" + std::string(ex::to_string(cfg.kind)) +
                          "\" experiment, not \"" + kind_name + "\"");
  }
  o.apply(cfg);
  const auto record = ex::run_experiment(cfg);
  ex::write_run(record, cfg.output_dir);
  std::cout << "config " << record.config_hash << "  code " << record.code_version << "\n"
            << record.summary.dump(2) << "\n"
            << "wrote " << cfg.output_dir << "\n";
  return kOk;
}

struct TrainArgs {
  std::string data, out, task = "classification", label_column = "label", method = "neuboots";
  std::string activation = "relu", schedule = "cosine", config;
  std::vector<std::string> feature_columns, target_columns, classes;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 100, batch_size = 32, members = 5;
  double lr = 0.01, momentum = 0.9, weight_decay = 0.0, dropout_p = 0.1;
  std::uint64_t seed = 0;
};

int train_command(const TrainArgs& a) {
  nb::io::CsvSchema schema;
  if (a.task == "regression") {
    schema.task = nb::nn::TaskKind::regression;
  } else if (a.task != "classification") {
    throw nb::ConfigError("--task must be classification or regression");
  }
  schema.label_column = a.label_column;
  schema.target_columns = a.target_columns;
  schema.feature_columns = a.feature_columns;
  schema.classes = a.classes;
  const auto data = nb::io::load_csv_dataset(a.data, schema);

  nb::nn::SgdConfig sgd;
  sgd.learning_rate = a.lr;
  sgd.momentum = a.momentum;
  sgd.weight_decay = a.weight_decay;
  sgd.batch_size = a.batch_size;
  sgd.epochs = a.epochs;
  sgd.lr_schedule = nb::nn::parse_schedule(a.schedule);
  sgd.validate();
  ex::ModelSpec spec;
  spec.hidden = a.hidden;
  spec.activation = nb::nn::parse_activation(a.activation);
  if (spec.hidden.empty()) throw nb::ConfigError("--hidden needs at least one layer");
  const auto method = ex::parse_method(a.method);
  if (method == ex::Method::baseline) {
    throw nb::ConfigError("train saves bootstrap models; use deep_ensemble with --members 1 for a single net");
  }
  if (method == ex::Method::mc_dropout) nb::baselines::validate_dropout_rate(a.dropout_p);

  const auto trained =
      ex::train_method(method, ex::make_arch(spec, data), data, sgd, a.seed, a.members, a.dropout_p);
  nb::io::Model model = std::visit(
      [](const auto& m) -> nb::io::Model {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, nb::nn::DenseNet>) {
          return nb::baselines::EnsembleOfNets{{m}, nb::baselines::MethodTag::deep_ensemble_plain};
        } else {
          return m;
        }
      },
      trained.model);
  nb::io::save_model(a.out, model);
  const auto& loss = trained.trace.epoch_loss;
  std::cout << "trained " << a.method << " on " << data.size() << " rows";
  if (!loss.empty()) std::cout << ", final epoch loss " << nb::io::format_double(loss.back());
  std::cout << "\nwrote " << a.out << "\n";
  return kOk;
}

struct PredictArgs {
  std::string model, data, out;
  std::vector<std::string> feature_columns, exclude{"label"};
  std::size_t B = 100;
  std::uint64_t seed = 0;
  double level = 0.95;
};

int predict_command(const PredictArgs& a) {
  const auto model = nb::io::load_model(a.model);
  const auto x = nb::io::load_csv_features(a.data, a.feature_columns, a.exclude);
  if (!(a.level > 0.0 && a.level < 1.0)) throw nb::ConfigError("--level must be in (0, 1)");
  if (a.B == 0) throw nb::ConfigError("--B must be >= 1");

  nb::Rng rng(nb::derive_seed(a.seed, ex::kStreamPredict));
  const nb::nn::DenseNet* first = nullptr;
  const auto ens = std::visit(
      [&](const auto& m) -> nb::generator::PredictionEnsemble {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, nb::generator::GeneratorNet>) {
          first = &m.net();
          if (x.cols() != m.net().input_dim()) throw nb::DimensionError("input width does not match the model");
          return nb::generator::predict_bootstrap(m, x, a.B, rng, true);
        } else if constexpr (std::is_same_v<T, nb::baselines::EnsembleOfNets>) {
          first = &m.members.front();
          if (x.cols() != first->input_dim()) throw nb::DimensionError("input width does not match the model");
          return nb::baselines::ensemble_predict(m, x, true);
        } else {
          first = &m.net;
          if (x.cols() != m.net.input_dim()) throw nb::DimensionError("input width does not match the model");
          return nb::baselines::mc_dropout_predict(m, x, a.B, rng, true);
        }
      },
      model);
  const bool classification = first->head() == nb::nn::OutputHead::softmax;
  const std::size_t d = ens.output_dim();

  nb::io::CsvTable t;
  t.header.push_back("row");
  std::vector<nb::generator::ConfidenceBand> bands;
  if (classification) {
    for (std::size_t j = 0; j < d; ++j) t.header.push_back("p" + std::to_string(j));
    for (const char* c : {"label", "predictive_entropy", "expected_entropy", "logit_std"}) t.header.push_back(c);
  } else {
    for (std::size_t j = 0; j < d; ++j) {
      for (const char* c : {"mean", "lower", "upper"}) t.header.push_back(std::string(c) + std::to_string(j));
    }
    if (ens.replicates() < 2) throw nb::ConfigError("confidence bands need at least two samples");
    for (std::size_t j = 0; j < d; ++j) bands.push_back(nb::generator::confidence_band(ens, a.level, j));
  }
  const auto mean = ens.mean();
  std::vector<nb::metrics::OodFeatures> feats;
  if (classification && ens.replicates() >= 2) feats = nb::metrics::ood_features(ens);
  for (std::size_t i = 0; i < ens.inputs(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    if (classification) {
      for (std::size_t j = 0; j < d; ++j) row.push_back(nb::io::format_double(mean(i, j)));
      row.push_back(std::to_string(nb::metrics::argmax(mean.row(i))));
      if (feats.empty()) {
        row.push_back(nb::io::format_double(nb::metrics::entropy(mean.row(i))));
        row.insert(row.end(), {"", ""});
      } else {
        row.push_back(nb::io::format_double(feats[i].predictive_entropy));
        row.push_back(nb::io::format_double(feats[i].expected_entropy));
        row.push_back(nb::io::format_double(feats[i].logit_std));
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        row.push_back(nb::io::format_double(bands[j].mean[i]));
        row.push_back(nb::io::format_double(bands[j].lower[i]));
        row.push_back(nb::io::format_double(bands[j].upper[i]));
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (a.out.empty() || a.out == "-") {
    nb::io::write_csv(std::cout, t);
  } else {
    nb::io::write_csv(a.out, t);
    std::cerr << "wrote " << a.out << "\n";
  }
  return kOk;
}

int bench_command(const std::string& config_path, const Overrides& o, std::optional<std::size_t> depth,
                  std::optional<std::size_t> width, std::optional<std::size_t> repeats) {
  ex::ExperimentConfig cfg = config_path.empty() ? ex::default_config(ex::ExperimentKind::bench_speed)
                                                 : ex::load_config(config_path);
  if (cfg.kind != ex::ExperimentKind::bench_speed) throw nb::ConfigError("bench needs a bench_speed config");
  if (depth) cfg.bench.depth = *depth;
  if (width) cfg.bench.width = *width;
  if (repeats) cfg.bench.repeats = *repeats;
  if (o.B) cfg.bench.b_values = {1, *o.B};
  o.apply(cfg);
  std::cout << "kernels: " << nb::simd::active().name << "\n";
  const auto record = ex::run_bench_speed(cfg);
  for (const auto& row : record.timings.rows()) {
    const auto& phase = std::get<std::string>(row[2]);
    std::printf("  %-12s %-28s %.6g\n", std::get<std::string>(row[1]).c_str(), phase.c_str(), std::get<double>(row[3]));
  }
  if (!o.output_dir.empty() || !config_path.empty()) {
    ex::write_run(record, cfg.output_dir);
    std::cout << "wrote " << cfg.output_dir << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural bootstrapper: bootstrap uncertainty from a single network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ex::code_version());

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model on a CSV dataset and save it");
  train->add_option("--data", ta.data, "Training CSV with a header row")->required();
  train->add_option("--out", ta.out, "Model file (.json for JSON, otherwise binary)")->required();
  train->add_option("--task", ta.task, "classification or regression")->capture_default_str();
  train->add_option("--label-column", ta.label_column, "Label column (classification)")->capture_default_str();
  train->add_option("--target-columns", ta.target_columns, "Target columns (regression)")->delimiter(',');
  train->add_option("--feature-columns", ta.feature_columns, "Feature columns (default: all others)")->delimiter(',');
  train->add_option("--classes", ta.classes, "Class names in index order")->delimiter(',');
  train->add_option("--method", ta.method, "neuboots, mc_dropout, standard_bootstrap, rwb or deep_ensemble")
      ->capture_default_str();
  train->add_option("--hidden", ta.hidden, "Hidden widths; the last one is S")->delimiter(',');
  train->add_option("--activation", ta.activation, "relu, tanh or identity")->capture_default_str();
  train->add_option("--epochs", ta.epochs)->capture_default_str();
  train->add_option("--batch-size", ta.batch_size)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--momentum", ta.momentum)->capture_default_str();
  train->add_option("--weight-decay", ta.weight_decay)->capture_default_str();
  train->add_option("--schedule", ta.schedule, "constant or cosine")->capture_default_str();
  train->add_option("--members", ta.members, "Ensemble size")->capture_default_str();
  train->add_option("--dropout-p", ta.dropout_p, "Dropout rate (mc_dropout)")->capture_default_str();
  train->add_option("--seed", ta.seed)->capture_default_str();

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Bootstrap predictions for the rows of a CSV");
  predict->add_option("--model", pa.model, "Model file")->required();
  predict->add_option("--data", pa.data, "Input CSV")->required();
  predict->add_option("--out", pa.out, "Output CSV (default: stdout)");
  predict->add_option("--feature-columns", pa.feature_columns)->delimiter(',');
  predict->add_option("--exclude-columns", pa.exclude, "Columns ignored as features")->delimiter(',')->capture_default_str();
  predict->add_option("--B", pa.B, "Bootstrap samples")->capture_default_str();
  predict->add_option("--level", pa.level, "Band level (regression)")->capture_default_str();
  predict->add_option("--seed", pa.seed)->capture_default_str();

  std::string kind, config_path;
  Overrides eo;
  auto* experiment = app.add_subcommand("experiment", "Run an experiment and write its tables");
  experiment->add_option("kind", kind,
                         "regression_coverage, calibration, active_learning, ood, imbalanced or bench_speed")
      ->required();
  experiment->add_option("--config", config_path, "JSON config (default: built-in defaults for the kind)");
  eo.add_to(experiment);

  std::string bench_config;
  Overrides bo;
  std::optional<std::size_t> depth, width, repeats;
  auto* bench = app.add_subcommand("bench", "Prediction speed and training overhead");
  bench->add_option("--config", bench_config, "bench_speed JSON config");
  bench->add_option("--depth", depth, "Hidden layers of the feature extractor");
  bench->add_option("--width", width, "Hidden width (S)");
  bench->add_option("--repeats", repeats, "Timing repeats (median reported)");
  bo.add_to(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return train_command(ta);
    if (*predict) return predict_command(pa);
    if (*experiment) return run_experiment_command(kind, config_path, eo);
    if (*bench) return bench_command(bench_config, bo, depth, width, repeats);
  } catch (const nb::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const nb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nb::DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nb::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
