#include "neuboots/experiments/runners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "neuboots/error.hpp"
#include "neuboots/experiments/methods.hpp"
#include "neuboots/generator/band.hpp"
#include "neuboots/metrics/calibration.hpp"
#include "neuboots/metrics/coverage.hpp"
#include "neuboots/metrics/detection.hpp"
#include "neuboots/metrics/diversity.hpp"
#include "neuboots/metrics/f1.hpp"
#include "neuboots/metrics/ood.hpp"

namespace neuboots::experiments {

using io::cell;
using io::Cell;
using io::MetricTable;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.kind != kind) {
    throw ConfigError("config kind is \"" + std::string(to_string(cfg.kind)) + "\", expected \"" +
                      std::string(to_string(kind)) + "\"");
  }
  cfg.validate();
}

std::vector<std::string> with_prefix(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

std::vector<Cell> concat(std::vector<Cell> a, const std::vector<Cell>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool is_ensemble(Method m) {
  return m == Method::standard_bootstrap || m == Method::rwb || m == Method::deep_ensemble;
}

// Re-raises a numerical failure with the replication (or seed) index attached.
template <class Fn>
auto annotate(std::size_t replication, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    auto where = e.where();
    where.replication = replication;
    throw NumericalError(std::string(e.what()) + " (replication " + std::to_string(replication) + ")",
                         std::move(where));
  }
}

std::vector<std::vector<std::size_t>> member_labels(const generator::PredictionEnsemble& ens) {
  std::vector<std::vector<std::size_t>> out(ens.replicates(), std::vector<std::size_t>(ens.inputs()));
  for (std::size_t b = 0; b < ens.replicates(); ++b) {
    for (std::size_t i = 0; i < ens.inputs(); ++i) out[b][i] = metrics::argmax(ens.sample(b, i));
  }
  return out;
}

double accuracy(const Matrix& probs, std::span<const std::size_t> labels) {
  return 1.0 - metrics::error_rate(probs, labels);
}

std::size_t sample_count(Method m, const ExperimentConfig& cfg) {
  if (m == Method::baseline) return 1;
  if (is_ensemble(m)) return cfg.ensemble_members;
  return cfg.B;
}

nn::Dataset shifted(const nn::Dataset& d, double shift) {
  Matrix x = d.x();
  for (double& v : x.flat()) v += shift;
  return nn::Dataset::classification(std::move(x), d.labels(), d.num_classes());
}

// Mean over seeds of a per-(seed, method) value, keyed by method name.
json method_means(const std::vector<Method>& methods, const std::vector<std::vector<double>>& per_seed) {
  json out = json::object();
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> v;
    for (const auto& s : per_seed) v.push_back(s[m]);
    out[std::string(to_string(methods[m]))] = mean_of(v);
  }
  return out;
}

}  // namespace

Split classification_split(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t n_train) {
  const auto& d = cfg.dataset;
  if (d.source == "synthetic") {
    Rng train_rng(derive_seed(seed, kStreamData));
    Rng test_rng(derive_seed(seed, kStreamTestData));
    auto train = synth_classification(d.generator, n_train, d.classification, train_rng);
    const std::string test_gen = d.generator == "imbalanced_gaussians" ? "gaussians" : d.generator;
    auto test = synth_classification(test_gen, d.test_n, d.classification, test_rng);
    return {std::move(train), std::move(test)};
  }
  io::CsvSchema schema = d.schema;
  schema.task = nn::TaskKind::classification;
  if (schema.classes.empty()) {
    // Class names from the training file so both files index classes alike.
    const auto table = io::read_csv(d.csv_path);
    const auto col = table.column(schema.label_column);
    if (!col) throw DataError("CSV has no column \"" + schema.label_column + "\"", std::nullopt, schema.label_column);
    std::set<std::string> names;
    for (const auto& row : table.rows) names.insert(row[*col]);
    schema.classes.assign(names.begin(), names.end());
  }
  auto all = io::load_csv_dataset(d.csv_path, schema);
  if (!d.test_csv_path.empty()) return {std::move(all), io::load_csv_dataset(d.test_csv_path, schema)};
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kStreamData));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_test = std::max<std::size_t>(1, all.size() * 3 / 10);
  if (n_test >= all.size()) throw DataError("CSV data is too small to hold out a test split");
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return {all.subset(train_idx), all.subset(test_idx)};
}

RunRecord run_regression_coverage(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::regression_coverage);
  const auto& p = cfg.coverage;
  for (auto m : cfg.methods) {
    if (m == Method::baseline) throw ConfigError("method \"baseline\" has no confidence band");
  }
  const auto fn = parse_regression_function(cfg.dataset.generator);
  const std::size_t G = p.grid_points;
  Matrix grid(G, 1);
  std::vector<double> truth(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double t = G == 1 ? 0.5 : static_cast<double>(g) / static_cast<double>(G - 1);
    grid(g, 0) = p.grid_lower + (p.grid_upper - p.grid_lower) * t;
    truth[g] = true_function(fn, grid(g, 0));
  }
  const std::size_t R = p.replications;
  const std::size_t R_ens = p.baseline_replications == 0 ? R : std::min(R, p.baseline_replications);
  const std::size_t M = cfg.methods.size();

  struct Rep {
    std::vector<std::optional<generator::ConfidenceBand>> bands;
    std::vector<double> train_seconds, predict_seconds;
  };
  std::vector<Rep> reps(cfg.seeds.size() * R);
  parallel_for(reps.size(), cfg.threads, [&](std::size_t t) {
    const std::size_t si = t / R, r = t % R;
    const std::uint64_t rep_seed = derive_seed(cfg.seeds[si], r);
    Rep& out = reps[t];
    out.bands.resize(M);
    out.train_seconds.assign(M, 0.0);
    out.predict_seconds.assign(M, 0.0);
    Rng data_rng(derive_seed(rep_seed, kStreamData));
    const auto sample = synth_regression(cfg.dataset.generator, cfg.dataset.n, cfg.dataset.noise_sd, data_rng);
    const auto arch = make_arch(cfg.model, sample.data);
    for (std::size_t m = 0; m < M; ++m) {
      const Method method = cfg.methods[m];
      if (is_ensemble(method) && r >= R_ens) continue;
      nn::SgdConfig sgd = cfg.sgd;
      if (is_ensemble(method) && p.baseline_epochs > 0) sgd.epochs = p.baseline_epochs;
      if (is_ensemble(method) && p.baseline_learning_rate > 0.0) sgd.learning_rate = p.baseline_learning_rate;
      annotate(r, [&] {
        auto t0 = Clock::now();
        const auto trained =
            train_method(method, arch, sample.data, sgd, rep_seed, p.baseline_members, cfg.dropout_p);
        out.train_seconds[m] = seconds_since(t0);
        t0 = Clock::now();
        const auto ens = predict_method(trained, grid, cfg.B, rep_seed);
        out.predict_seconds[m] = seconds_since(t0);
        out.bands[m] = generator::confidence_band(ens, p.level, 0);
        return 0;
      });
    }
  });

  RunRecord rec = make_record(cfg);
  MetricTable per_point({"seed", "method", "point", "x", "truth", "coverage", "mean_lower", "mean_upper"});
  MetricTable summary({"seed", "method", "replications", "coverage", "mean_width", "rmse_of_mean"});
  std::vector<std::vector<double>> seed_cov(cfg.seeds.size(), std::vector<double>(M, 0.0));
  std::vector<std::vector<double>> seed_width = seed_cov;
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const auto seed = static_cast<std::int64_t>(cfg.seeds[si]);
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<generator::ConfidenceBand> bands;
      double train_s = 0.0, predict_s = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const Rep& rep = reps[si * R + r];
        if (rep.bands[m]) bands.push_back(*rep.bands[m]);
        train_s += rep.train_seconds[m];
        predict_s += rep.predict_seconds[m];
      }
      const auto cov = metrics::coverage_rate(bands, truth);
      std::vector<double> lower(G, 0.0), upper(G, 0.0);
      double width = 0.0, sq = 0.0;
      for (const auto& b : bands) {
        for (std::size_t g = 0; g < G; ++g) {
          lower[g] += b.lower[g] / static_cast<double>(bands.size());
          upper[g] += b.upper[g] / static_cast<double>(bands.size());
          width += b.upper[g] - b.lower[g];
          sq += (b.mean[g] - truth[g]) * (b.mean[g] - truth[g]);
        }
      }
      const double cells = static_cast<double>(bands.size() * G);
      const std::string name(to_string(cfg.methods[m]));
      for (std::size_t g = 0; g < G; ++g) {
        per_point.add_row({seed, name, cell(g), grid(g, 0), truth[g], cov.per_point[g], lower[g], upper[g]});
      }
      summary.add_row({seed, name, cell(bands.size()), cov.mean, width / cells, std::sqrt(sq / cells)});
      seed_cov[si][m] = cov.mean;
      seed_width[si][m] = width / cells;
      rec.timings.add_row({seed, name, "train", train_s});
      rec.timings.add_row({seed, name, "predict", predict_s});
    }
  }
  per_point.sort_by("seed");
  summary.sort_by("seed");
  rec.tables["coverage_per_point"] = std::move(per_point);
  rec.tables["coverage_summary"] = std::move(summary);
  rec.summary = {{"coverage", method_means(cfg.methods, seed_cov)},
                 {"mean_width", method_means(cfg.methods, seed_width)},
                 {"level", p.level}};
  rec.timings.sort_by("seed");
  return rec;
}

RunRecord run_calibration(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::calibration);
  const std::size_t M = cfg.methods.size();
  const auto& bag_b = cfg.calibration.bagging_b;
  const bool has_neuboots =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::neuboots) != cfg.methods.end();

  struct SeedResult {
    std::vector<metrics::CalibrationReport> reports;
    std::vector<std::optional<metrics::DiversityReport>> diversity;
    std::vector<double> train_seconds, predict_seconds;
    std::vector<metrics::CalibrationReport> bagging;
  };
  std::vector<SeedResult> results(cfg.seeds.size());
  parallel_for(results.size(), cfg.threads, [&](std::size_t si) {
    const auto seed = cfg.seeds[si];
    const auto split = classification_split(cfg, seed, cfg.dataset.n);
    const auto arch = make_arch(cfg.model, split.train);
    const auto& labels = split.test.labels();
    SeedResult& out = results[si];
    for (std::size_t m = 0; m < M; ++m) {
      annotate(si, [&] {
        const Method method = cfg.methods[m];
        auto t0 = Clock::now();
        const auto trained =
            train_method(method, arch, split.train, cfg.sgd, seed, cfg.ensemble_members, cfg.dropout_p);
        out.train_seconds.push_back(seconds_since(t0));
        t0 = Clock::now();
        const auto ens = predict_method(trained, split.test.x(), cfg.B, seed);
        out.predict_seconds.push_back(seconds_since(t0));
        out.reports.push_back(metrics::calibration_report(ens.mean(), labels, cfg.calibration.ece_bins));
        if (ens.replicates() >= 2) {
          const auto preds = member_labels(ens);
          out.diversity.push_back(metrics::diversity(preds, labels));
        } else {
          out.diversity.push_back(std::nullopt);
        }
        if (method == Method::neuboots && !bag_b.empty()) {
          const std::size_t b_max = *std::max_element(bag_b.begin(), bag_b.end());
          const auto full = predict_method(trained, split.test.x(), b_max, seed);
          for (auto b : bag_b) {
            out.bagging.push_back(
                metrics::calibration_report(first_samples(full, b).mean(), labels, cfg.calibration.ece_bins));
          }
        }
        return 0;
      });
    }
  });

  RunRecord rec = make_record(cfg);
  MetricTable calib(with_prefix(with_prefix({"seed", "method", "samples"}, io::calibration_columns()),
                                io::diversity_columns()));
  MetricTable reliability(with_prefix({"seed", "method"}, io::reliability_columns()));
  MetricTable bagging(with_prefix({"seed", "B"}, io::calibration_columns()));
  std::vector<std::vector<double>> ece(results.size(), std::vector<double>(M));
  std::vector<std::vector<double>> err = ece, nll = ece, brier = ece;
  std::map<std::size_t, std::vector<double>> bag_err;
  // Relative times use the baseline when present, else the first method.
  const auto ref_it = std::find(cfg.methods.begin(), cfg.methods.end(), Method::baseline);
  const std::size_t ref = ref_it == cfg.methods.end() ? 0 : static_cast<std::size_t>(ref_it - cfg.methods.begin());
  for (std::size_t si = 0; si < results.size(); ++si) {
    const auto seed = static_cast<std::int64_t>(cfg.seeds[si]);
    const auto& r = results[si];
    for (std::size_t m = 0; m < M; ++m) {
      const std::string name(to_string(cfg.methods[m]));
      std::vector<Cell> div(4);
      if (r.diversity[m]) div = io::diversity_cells(*r.diversity[m]);
      calib.add_row(concat(concat({seed, name, cell(sample_count(cfg.methods[m], cfg))},
                                  io::calibration_cells(r.reports[m])),
                           div));
      const auto& bins = r.reports[m].bin_stats;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        reliability.add_row({seed, name, cell(b), bins[b].lower, bins[b].upper, bins[b].confidence_mean,
                             bins[b].accuracy, cell(bins[b].count)});
      }
      ece[si][m] = r.reports[m].ece;
      err[si][m] = r.reports[m].error_rate;
      nll[si][m] = r.reports[m].nll;
      brier[si][m] = r.reports[m].brier;
      rec.timings.add_row({seed, name, "train", r.train_seconds[m]});
      rec.timings.add_row({seed, name, "predict", r.predict_seconds[m]});
      rec.timings.add_row({seed, name, "train_relative", r.train_seconds[m] / r.train_seconds[ref]});
      rec.timings.add_row({seed, name, "predict_relative", r.predict_seconds[m] / r.predict_seconds[ref]});
    }
    for (std::size_t k = 0; k < r.bagging.size(); ++k) {
      bagging.add_row(concat({seed, cell(bag_b[k])}, io::calibration_cells(r.bagging[k])));
      bag_err[bag_b[k]].push_back(r.bagging[k].error_rate);
    }
  }
  calib.sort_by("seed");
  reliability.sort_by("seed");
  bagging.sort_by("seed");
  rec.tables["calibration"] = std::move(calib);
  rec.tables["reliability"] = std::move(reliability);
  if (has_neuboots && !bag_b.empty()) rec.tables["bagging"] = std::move(bagging);
  json bag = json::object();
  for (const auto& [b, v] : bag_err) bag[std::to_string(b)] = mean_of(v);
  rec.summary = {{"error_pct", method_means(cfg.methods, err)},
                 {"ece_pct", method_means(cfg.methods, ece)},
                 {"nll", method_means(cfg.methods, nll)},
                 {"brier_x100", method_means(cfg.methods, brier)},
                 {"neuboots_error_pct_by_B", std::move(bag)}};
  rec.timings.sort_by("seed");
  return rec;
}

RunRecord run_active_learning(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::active_learning);
  const auto& p = cfg.active_learning;
  const std::size_t M = cfg.methods.size();
  const std::size_t A = p.acquisitions.size();

  struct Curve {
    std::vector<double> accuracy;
    std::vector<std::size_t> labeled;
    double train_seconds = 0.0;
  };
  const std::size_t per_seed = M * A;
  std::vector<Curve> curves(cfg.seeds.size() * per_seed);
  parallel_for(curves.size(), cfg.threads, [&](std::size_t t) {
    const std::size_t si = t / per_seed, m = (t % per_seed) / A, a = t % A;
    const auto seed = cfg.seeds[si];
    const Method method = cfg.methods[m];
    const bool entropy = p.acquisitions[a] == "entropy";
    const auto split = classification_split(cfg, seed, p.initial + p.pool);
    const auto arch = make_arch(cfg.model, split.train);
    std::vector<std::size_t> labeled(split.train.size() < p.initial ? split.train.size() : p.initial);
    std::iota(labeled.begin(), labeled.end(), std::size_t{0});
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = labeled.size(); i < split.train.size(); ++i) unlabeled.push_back(i);
    Rng acquire_rng(derive_seed(seed, kStreamAcquire));
    Curve& out = curves[t];
    for (std::size_t stage = 0; stage < p.stages; ++stage) {
      annotate(si, [&] {
        const auto pool = split.train.subset(labeled);
        const auto t0 = Clock::now();
        // Same seed every stage: with q = 0 each stage retrains the same model.
        const auto trained = train_method(method, arch, pool, cfg.sgd, seed, cfg.ensemble_members, cfg.dropout_p);
        out.train_seconds += seconds_since(t0);
        const auto test_ens = predict_method(trained, split.test.x(), cfg.B, seed);
        out.accuracy.push_back(accuracy(test_ens.mean(), split.test.labels()));
        out.labeled.push_back(labeled.size());
        if (stage + 1 == p.stages || p.query == 0 || unlabeled.empty()) return 0;
        const std::size_t q = std::min(p.query, unlabeled.size());
        std::vector<std::size_t> chosen;
        if (entropy) {
          const auto ens = predict_method(trained, split.train.x().select_rows(unlabeled), cfg.B, seed);
          const Matrix probs = ens.mean();
          std::vector<double> h(unlabeled.size());
          for (std::size_t i = 0; i < unlabeled.size(); ++i) h[i] = metrics::entropy(probs.row(i));
          std::vector<std::size_t> order(unlabeled.size());
          std::iota(order.begin(), order.end(), std::size_t{0});
          std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return h[x] > h[y]; });
          chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q));
        } else {
          std::vector<std::size_t> order(unlabeled.size());
          std::iota(order.begin(), order.end(), std::size_t{0});
          acquire_rng.shuffle(std::span<std::size_t>(order));
          chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q));
        }
        std::sort(chosen.begin(), chosen.end());
        for (auto c : chosen) labeled.push_back(unlabeled[c]);
        for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) {
          unlabeled.erase(unlabeled.begin() + static_cast<std::ptrdiff_t>(*it));
        }
        return 0;
      });
    }
  });

  RunRecord rec = make_record(cfg);
  MetricTable curve_table({"seed", "method", "acquisition", "stage", "labeled", "accuracy"});
  MetricTable summary_table({"seed", "method", "acquisition", "aulc", "first_accuracy", "final_accuracy"});
  json aulc = json::object();
  std::map<std::string, std::vector<double>> aulc_values;
  for (std::size_t t = 0; t < curves.size(); ++t) {
    const std::size_t si = t / per_seed, m = (t % per_seed) / A, a = t % A;
    const auto seed = static_cast<std::int64_t>(cfg.seeds[si]);
    const std::string name(to_string(cfg.methods[m]));
    const auto& c = curves[t];
    for (std::size_t s = 0; s < c.accuracy.size(); ++s) {
      curve_table.add_row({seed, name, p.acquisitions[a], cell(s), cell(c.labeled[s]), c.accuracy[s]});
    }
    const double area = mean_of(c.accuracy);
    summary_table.add_row({seed, name, p.acquisitions[a], area, c.accuracy.front(), c.accuracy.back()});
    aulc_values[name + "/" + p.acquisitions[a]].push_back(area);
    rec.timings.add_row({seed, name + "/" + p.acquisitions[a], "train", c.train_seconds});
  }
  for (const auto& [key, v] : aulc_values) aulc[key] = mean_of(v);
  curve_table.sort_by("seed");
  summary_table.sort_by("seed");
  rec.tables["learning_curve"] = std::move(curve_table);
  rec.tables["active_learning_summary"] = std::move(summary_table);
  rec.summary = {{"aulc", std::move(aulc)}};
  rec.timings.sort_by("seed");
  return rec;
}

RunRecord run_ood(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::ood);
  const auto& p = cfg.ood;
  for (auto m : cfg.methods) {
    if (m == Method::baseline) throw ConfigError("method \"baseline\" gives one sample; OOD features need B >= 2");
    if (is_ensemble(m) && cfg.ensemble_members < 2) throw ConfigError("OOD features need ensemble_members >= 2");
  }
  std::vector<std::size_t> sweep = p.b_sweep;
  if (std::find(sweep.begin(), sweep.end(), cfg.B) == sweep.end()) sweep.push_back(cfg.B);
  std::sort(sweep.begin(), sweep.end());
  const std::size_t M = cfg.methods.size();

  struct Row {
    std::size_t B;
    metrics::DetectionMetrics detection;
    std::vector<metrics::OodFeatures> in, out;
  };
  std::vector<std::vector<std::vector<Row>>> results(cfg.seeds.size(), std::vector<std::vector<Row>>(M));
  std::vector<std::vector<double>> train_seconds(cfg.seeds.size(), std::vector<double>(M));
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t si) {
    const auto seed = cfg.seeds[si];
    ExperimentConfig in_cfg = cfg;
    in_cfg.dataset.test_n = p.n_in;
    const auto split = classification_split(in_cfg, seed, cfg.dataset.n);
    nn::Dataset out_data = [&] {
      if (cfg.dataset.source == "synthetic") {
        auto params = cfg.dataset.classification;
        params.shift += p.shift;
        const std::string gen =
            cfg.dataset.generator == "imbalanced_gaussians" ? "gaussians" : cfg.dataset.generator;
        Rng rng(derive_seed(seed, kStreamOutData));
        return synth_classification(gen, p.n_out, params, rng);
      }
      return shifted(split.test, p.shift);
    }();
    const auto arch = make_arch(cfg.model, split.train);
    const std::size_t fit_in = std::max<std::size_t>(2, static_cast<std::size_t>(p.validation_fraction * split.test.size()));
    const std::size_t fit_out = std::max<std::size_t>(2, static_cast<std::size_t>(p.validation_fraction * out_data.size()));
    if (fit_in >= split.test.size() || fit_out >= out_data.size()) {
      throw ConfigError("ood.validation_fraction leaves no rows to score");
    }
    for (std::size_t m = 0; m < M; ++m) {
      annotate(si, [&] {
        const Method method = cfg.methods[m];
        const auto t0 = Clock::now();
        const auto trained =
            train_method(method, arch, split.train, cfg.sgd, seed, cfg.ensemble_members, cfg.dropout_p);
        train_seconds[si][m] = seconds_since(t0);
        const std::size_t b_max = sweep.back();
        const auto ens_in = predict_method(trained, split.test.x(), b_max, seed, true);
        const auto ens_out = predict_method(trained, out_data.x(), b_max, seed, true);
        for (auto b : sweep) {
          if (b > ens_in.replicates()) continue;  // ensembles stop at their member count
          Row row{b, {}, metrics::ood_features(first_samples(ens_in, b)),
                  metrics::ood_features(first_samples(ens_out, b))};
          const Matrix fin = metrics::features_matrix(row.in);
          const Matrix fout = metrics::features_matrix(row.out);
          std::vector<std::size_t> in_fit(fit_in), out_fit(fit_out), in_eval, out_eval;
          std::iota(in_fit.begin(), in_fit.end(), std::size_t{0});
          std::iota(out_fit.begin(), out_fit.end(), std::size_t{0});
          for (std::size_t i = fit_in; i < fin.rows(); ++i) in_eval.push_back(i);
          for (std::size_t i = fit_out; i < fout.rows(); ++i) out_eval.push_back(i);
          const auto det = metrics::fit_detector(fin.select_rows(in_fit), fout.select_rows(out_fit));
          std::vector<double> s_in, s_out;
          for (auto i : in_eval) s_in.push_back(det.score(fin.row(i)));
          for (auto i : out_eval) s_out.push_back(det.score(fout.row(i)));
          row.detection = metrics::detection_metrics(s_in, s_out);
          results[si][m].push_back(std::move(row));
        }
        return 0;
      });
    }
  });

  RunRecord rec = make_record(cfg);
  MetricTable detection(with_prefix({"seed", "method", "B"}, io::detection_columns()));
  MetricTable features({"seed", "method", "B", "split", "logit_std_mean", "logit_std_sd", "logit_std_q10",
                        "logit_std_median", "logit_std_q90", "max_predictive_mean", "expected_entropy",
                        "predictive_entropy"});
  std::map<std::string, std::vector<double>> auroc, std_in, std_out;
  for (std::size_t si = 0; si < results.size(); ++si) {
    const auto seed = static_cast<std::int64_t>(cfg.seeds[si]);
    for (std::size_t m = 0; m < M; ++m) {
      const std::string name(to_string(cfg.methods[m]));
      rec.timings.add_row({seed, name, "train", train_seconds[si][m]});
      for (const auto& row : results[si][m]) {
        detection.add_row(concat({seed, name, cell(row.B)}, io::detection_cells(row.detection)));
        for (int split = 0; split < 2; ++split) {
          const auto& f = split == 0 ? row.in : row.out;
          std::vector<double> stds;
          double mpm = 0.0, ee = 0.0, pe = 0.0;
          for (const auto& x : f) {
            stds.push_back(x.logit_std);
            mpm += x.max_predictive_mean;
            ee += x.expected_entropy;
            pe += x.predictive_entropy;
          }
          const double n = static_cast<double>(f.size());
          const double mu = mean_of(stds);
          double var = 0.0;
          for (double s : stds) var += (s - mu) * (s - mu);
          const double sd = stds.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
          features.add_row({seed, name, cell(row.B), split == 0 ? "in" : "out", mu, sd,
                            generator::quantile(stds, 0.1), generator::quantile(stds, 0.5),
                            generator::quantile(stds, 0.9), mpm / n, ee / n, pe / n});
          const std::string key = name + "/B=" + std::to_string(row.B);
          (split == 0 ? std_in : std_out)[key].push_back(mu);
        }
        auroc[name + "/B=" + std::to_string(row.B)].push_back(row.detection.auroc);
      }
    }
  }
  json s_auroc = json::object(), s_in = json::object(), s_out = json::object();
  for (const auto& [k, v] : auroc) s_auroc[k] = mean_of(v);
  for (const auto& [k, v] : std_in) s_in[k] = mean_of(v);
  for (const auto& [k, v] : std_out) s_out[k] = mean_of(v);
  detection.sort_by("seed");
  features.sort_by("seed");
  rec.tables["ood_detection"] = std::move(detection);
  rec.tables["ood_features"] = std::move(features);
  rec.summary = {{"auroc", std::move(s_auroc)},
                 {"logit_std_mean_in", std::move(s_in)},
                 {"logit_std_mean_out", std::move(s_out)}};
  rec.timings.sort_by("seed");
  return rec;
}

RunRecord run_imbalanced(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::imbalanced);
  const std::size_t M = cfg.methods.size();
  struct SeedResult {
    std::size_t num_classes = 0;
    std::vector<std::size_t> train_counts;
    std::vector<std::vector<double>> f1;
    std::vector<double> train_seconds;
  };
  std::vector<SeedResult> results(cfg.seeds.size());
  parallel_for(results.size(), cfg.threads, [&](std::size_t si) {
    const auto seed = cfg.seeds[si];
    const auto split = classification_split(cfg, seed, cfg.dataset.n);
    const auto arch = make_arch(cfg.model, split.train);
    auto& out = results[si];
    out.num_classes = split.train.num_classes();
    out.train_counts.assign(out.num_classes, 0);
    for (auto l : split.train.labels()) ++out.train_counts[l];
    for (std::size_t m = 0; m < M; ++m) {
      annotate(si, [&] {
        const auto t0 = Clock::now();
        const auto trained =
            train_method(cfg.methods[m], arch, split.train, cfg.sgd, seed, cfg.ensemble_members, cfg.dropout_p);
        out.train_seconds.push_back(seconds_since(t0));
        const auto ens = predict_method(trained, split.test.x(), cfg.B, seed);
        out.f1.push_back(metrics::per_class_f1(metrics::argmax_rows(ens.mean()), split.test.labels(),
                                               out.num_classes));
        return 0;
      });
    }
  });

  const std::size_t k = results.front().num_classes;
  std::vector<std::string> cols{"seed", "method"};
  for (std::size_t c = 0; c < k; ++c) cols.push_back("f1_" + std::to_string(c));
  for (const char* extra : {"macro_f1", "minority_f1", "majority_f1", "f1_spread"}) cols.push_back(extra);
  MetricTable table(cols);
  RunRecord rec = make_record(cfg);
  std::vector<std::vector<double>> minority(results.size(), std::vector<double>(M));
  std::vector<std::vector<double>> macro = minority;
  for (std::size_t si = 0; si < results.size(); ++si) {
    const auto& r = results[si];
    const auto seed = static_cast<std::int64_t>(cfg.seeds[si]);
    const auto min_c = static_cast<std::size_t>(std::min_element(r.train_counts.begin(), r.train_counts.end()) -
                                                r.train_counts.begin());
    const auto max_c = static_cast<std::size_t>(std::max_element(r.train_counts.begin(), r.train_counts.end()) -
                                                r.train_counts.begin());
    for (std::size_t m = 0; m < M; ++m) {
      const auto& f = r.f1[m];
      std::vector<Cell> row{seed, std::string(to_string(cfg.methods[m]))};
      for (double v : f) row.push_back(v);
      const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
      row.push_back(mean_of(f));
      row.push_back(f[min_c]);
      row.push_back(f[max_c]);
      row.push_back(*hi - *lo);
      table.add_row(std::move(row));
      minority[si][m] = f[min_c];
      macro[si][m] = mean_of(f);
      rec.timings.add_row({seed, std::string(to_string(cfg.methods[m])), "train", r.train_seconds[m]});
    }
  }
  table.sort_by("seed");
  rec.tables["per_class_f1"] = std::move(table);
  rec.summary = {{"minority_f1", method_means(cfg.methods, minority)},
                 {"macro_f1", method_means(cfg.methods, macro)}};
  rec.timings.sort_by("seed");
  return rec;
}

namespace {

nn::ArchSpec bench_arch(const BenchParams& p) {
  nn::ArchSpec arch;
  arch.input_dim = p.input_dim;
  arch.hidden.assign(p.depth, p.width);
  arch.output_dim = p.output_dim;
  arch.hidden_activation = nn::Activation::relu;
  arch.head = nn::OutputHead::softmax;
  return arch;
}

template <class Fn>
double median_seconds(std::size_t repeats, Fn&& fn) {
  std::vector<double> t;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    t.push_back(seconds_since(t0));
  }
  std::sort(t.begin(), t.end());
  return t.size() % 2 == 1 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
}

}  // namespace

std::vector<BenchResult> bench_prediction(const BenchParams& p, double dropout_p, std::uint64_t seed) {
  Rng init(derive_seed(seed, kStreamInit));
  const auto g = generator::GeneratorNet::initialize(bench_arch(p), init);
  const baselines::DropoutPredictor drop{g.net(), dropout_p};
  Rng data_rng(derive_seed(seed, kStreamData));
  Matrix x(p.inputs, p.input_dim);
  for (double& v : x.flat()) v = data_rng.normal();

  std::vector<BenchResult> out;
  for (auto B : p.b_values) {
    BenchResult r;
    r.B = B;
    {
      Rng a(derive_seed(seed, kStreamPredict)), b(derive_seed(seed, kStreamPredict));
      const auto cached = generator::predict_bootstrap(g, x, B, a);
      const auto naive = generator::predict_bootstrap_uncached(g, x, B, b);
      for (std::size_t s = 0; s < B; ++s) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
          for (std::size_t j = 0; j < g.output_dim(); ++j) {
            r.cache_max_abs_diff = std::max(r.cache_max_abs_diff, std::abs(cached.sample(s, i)[j] - naive.sample(s, i)[j]));
          }
        }
      }
      if (!(r.cache_max_abs_diff <= 1e-12)) {
        throw NumericalError("cached bootstrap prediction differs from the full forward loop by " +
                                 std::to_string(r.cache_max_abs_diff),
                             {});
      }
    }
    volatile double sink = 0.0;
    r.cached_seconds = median_seconds(p.repeats, [&] {
      Rng a(derive_seed(seed, kStreamPredict));
      sink = sink + generator::predict_bootstrap(g, x, B, a).sample(0, 0)[0];
    });
    r.uncached_seconds = median_seconds(p.repeats, [&] {
      Rng a(derive_seed(seed, kStreamPredict));
      sink = sink + generator::predict_bootstrap_uncached(g, x, B, a).sample(0, 0)[0];
    });
    r.mc_dropout_seconds = median_seconds(p.repeats, [&] {
      Rng a(derive_seed(seed, kStreamPredict));
      sink = sink + baselines::mc_dropout_predict(drop, x, B, a).sample(0, 0)[0];
    });
    out.push_back(r);
  }
  return out;
}

TrainingOverhead bench_training(const BenchParams& p, const nn::SgdConfig& sgd, std::uint64_t seed) {
  ClassificationParams params;
  params.num_classes = p.output_dim;
  params.dim = p.input_dim;
  params.separation = 3.0;
  params.noise = 1.0;
  Rng data_rng(derive_seed(seed, kStreamData));
  const auto data = synth_classification("gaussians", p.train_n, params, data_rng);
  const auto arch = bench_arch(p);
  nn::SgdConfig cfg = sgd;
  cfg.epochs = p.train_epochs;
  // Interleave the two so drift in machine load hits both alike.
  std::vector<double> plain, boots;
  for (std::size_t r = 0; r < p.repeats; ++r) {
    auto t0 = Clock::now();
    train_method(Method::baseline, arch, data, cfg, seed, 1, 0.0);
    plain.push_back(seconds_since(t0) / static_cast<double>(cfg.epochs));
    t0 = Clock::now();
    train_method(Method::neuboots, arch, data, cfg, seed, 1, 0.0);
    boots.push_back(seconds_since(t0) / static_cast<double>(cfg.epochs));
  }
  std::sort(plain.begin(), plain.end());
  std::sort(boots.begin(), boots.end());
  return {plain[plain.size() / 2], boots[boots.size() / 2]};
}

RunRecord run_bench_speed(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::bench_speed);
  RunRecord rec = make_record(cfg);
  MetricTable check({"seed", "B", "cache_max_abs_diff"});
  json speedups = json::object();
  // Timing runs stay sequential so measurements do not compete for cores.
  for (auto seed : cfg.seeds) {
    const auto s = static_cast<std::int64_t>(seed);
    const auto results = bench_prediction(cfg.bench, cfg.dropout_p, seed);
    for (const auto& r : results) {
      check.add_row({s, cell(r.B), r.cache_max_abs_diff});
      const std::string b = "_B" + std::to_string(r.B);
      rec.timings.add_row({s, "neuboots", "predict_cached" + b, r.cached_seconds});
      rec.timings.add_row({s, "neuboots", "predict_uncached" + b, r.uncached_seconds});
      rec.timings.add_row({s, "mc_dropout", "predict" + b, r.mc_dropout_seconds});
      rec.timings.add_row({s, "neuboots", "speedup_vs_mc_dropout" + b, r.mc_dropout_seconds / r.cached_seconds});
      rec.timings.add_row({s, "neuboots", "speedup_vs_uncached" + b, r.uncached_seconds / r.cached_seconds});
    }
    const auto overhead = bench_training(cfg.bench, cfg.sgd, seed);
    rec.timings.add_row({s, "baseline", "train_epoch", overhead.plain_epoch_seconds});
    rec.timings.add_row({s, "neuboots", "train_epoch", overhead.neuboots_epoch_seconds});
    rec.timings.add_row({s, "neuboots", "train_overhead", overhead.overhead()});
  }
  check.sort_by("seed");
  rec.tables["cache_check"] = std::move(check);
  rec.summary = {{"cache_tolerance", 1e-12}};
  return rec;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::regression_coverage: return run_regression_coverage(cfg);
    case ExperimentKind::calibration: return run_calibration(cfg);
    case ExperimentKind::active_learning: return run_active_learning(cfg);
    case ExperimentKind::ood: return run_ood(cfg);
    case ExperimentKind::imbalanced: return run_imbalanced(cfg);
    case ExperimentKind::bench_speed: return run_bench_speed(cfg);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace neuboots::experiments
