// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "neuboots/bootstrap/weights.hpp"
#include "neuboots/experiments/config.hpp"
#include "neuboots/experiments/runners.hpp"
#include "neuboots/generator/generator.hpp"
#include "neuboots/metrics/calibration.hpp"
#include "neuboots/metrics/detection.hpp"
#include "neuboots/metrics/diversity.hpp"
#include "neuboots/metrics/f1.hpp"
#include "neuboots/metrics/ood.hpp"
#include "testing.hpp"

using namespace neuboots;
namespace ex = neuboots::experiments;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed checks with a short reason; the first few are reported.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) failed_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool passed() const { return failures_ == 0; }
  std::string detail() const {
    std::ostringstream s;
    const auto& items = passed() ? notes_ : failed_;
    for (std::size_t i = 0; i < items.size(); ++i) s << (i ? "; " : "") << items[i];
    if (failures_ > failed_.size()) s << "; and " << failures_ - failed_.size() << " more";
    return s.str();
  }

 private:
  std::size_t failures_ = 0;
  std::vector<std::string> failed_, notes_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nn::ArchSpec random_arch(Rng& rng, bool classification) {
  nn::ArchSpec a;
  a.input_dim = 1 + rng.below(6);
  const std::size_t depth = 1 + rng.below(4);
  for (std::size_t l = 0; l < depth; ++l) a.hidden.push_back(2 + rng.below(24));
  a.output_dim = 1 + rng.below(5);
  const nn::Activation acts[] = {nn::Activation::relu, nn::Activation::tanh, nn::Activation::identity};
  a.hidden_activation = acts[rng.below(3)];
  a.head = classification ? nn::OutputHead::softmax : nn::OutputHead::identity;
  if (classification && a.output_dim < 2) a.output_dim = 2;
  return a;
}

void generator_identity(Verdict& v) {
  Rng rng(101);
  std::size_t compared = 0;
  for (int t = 0; t < 100; ++t) {
    const auto arch = random_arch(rng, t % 2 == 1);
    const generator::GeneratorNet g(testing::random_net(arch, rng));
    const Matrix x = testing::random_matrix(1 + rng.below(40), arch.input_dim, rng, 2.0);
    const Matrix a = generator::generator_forward(g, x, bootstrap::BootstrapAlpha::ones(g.num_blocks()));
    const Matrix b = nn::forward(g.net(), x);
    bool equal = a.rows() == b.rows() && a.cols() == b.cols();
    for (std::size_t i = 0; equal && i < a.flat().size(); ++i) equal = a.flat()[i] == b.flat()[i];
    compared += a.flat().size();
    v.require(equal, "net " + std::to_string(t) + " differs from the plain forward");
  }
  v.note("100 nets, " + std::to_string(compared) + " outputs bitwise equal");
}

void cache_soundness(Verdict& v) {
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto arch = random_arch(rng, t % 2 == 1);
    const generator::GeneratorNet g(testing::random_net(arch, rng));
    const Matrix x = testing::random_matrix(16, arch.input_dim, rng);
    Rng a(5000 + t), b(5000 + t);
    const auto cached = generator::predict_bootstrap(g, x, 100, a);
    for (std::size_t r = 0; r < 100; ++r) {
      const Matrix naive =
          generator::generator_forward(g, x, bootstrap::sample_dirichlet_alpha(g.num_blocks(), b));
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < g.output_dim(); ++j) {
          worst = std::max(worst, std::abs(cached.sample(r, i)[j] - naive(i, j)));
        }
      }
    }
  }
  v.require(worst <= 1e-12, "max difference " + fmt(worst));
  v.note("20 nets, B = 100, max difference " + fmt(worst));
}

void gradient_suite(Verdict& v) {
  Rng rng(303);
  double worst = 0.0;
  std::size_t checks = 0;
  auto record = [&](const testing::GradCheck& c, const std::string& what) {
    worst = std::max(worst, c.max_rel_error);
    ++checks;
    v.require(c.max_rel_error < 1e-4, what + " relative error " + fmt(c.max_rel_error));
  };
  for (nn::Activation act : {nn::Activation::tanh, nn::Activation::relu, nn::Activation::identity}) {
    for (int t = 0; t < 4; ++t) {
      nn::Batch reg;
      reg.x = testing::random_matrix(8, 3, rng);
      reg.y = testing::random_matrix(8, 2, rng);
      const auto rnet = testing::random_net({3, {7, 5}, 2, act, nn::OutputHead::identity}, rng);
      record(testing::check_gradients(rnet, reg, nn::LossKind::mse), "mse");

      nn::Batch cls;
      cls.x = testing::random_matrix(8, 3, rng);
      std::vector<std::size_t> labels(8);
      for (auto& l : labels) l = rng.below(4);
      cls.y = labels;
      const auto cnet = testing::random_net({3, {7, 5}, 4, act, nn::OutputHead::softmax}, rng);
      record(testing::check_gradients(cnet, cls, nn::LossKind::cross_entropy), "cross_entropy");
      record(testing::check_gradients(cnet, cls, nn::LossKind::brier), "brier");

      // Through the alpha node, with the same alpha weighting the loss.
      bootstrap::BlockAssignment u;
      u.num_blocks = 5;
      for (std::size_t i = 0; i < 8; ++i) u.block_of.push_back(i % 5);
      u.block_sizes = {2, 2, 2, 1, 1};
      const auto alpha = bootstrap::sample_dirichlet_alpha(5, rng);
      Matrix scale(1, 5);
      std::copy(alpha.alpha.begin(), alpha.alpha.end(), scale.flat().begin());
      nn::ForwardOptions opts;
      opts.final_input_scale = &scale;
      for (auto* b : {&reg, &cls}) b->weights = bootstrap::expand_weights(alpha, u);
      record(testing::check_gradients(rnet, reg, nn::LossKind::mse, opts), "mse through alpha");
      record(testing::check_gradients(cnet, cls, nn::LossKind::cross_entropy, opts), "cross_entropy through alpha");
      record(testing::check_gradients(cnet, cls, nn::LossKind::brier, opts), "brier through alpha");
    }
  }
  v.note(std::to_string(checks) + " gradient checks, worst relative error " + fmt(worst, 3));
}

void weight_laws(Verdict& v) {
  const auto t0 = Clock::now();
  constexpr std::size_t S = 100, draws = 100000;
  Rng rng(404);
  std::vector<double> mean(S, 0.0);
  double sq = 0.0, worst_sum = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto a = bootstrap::sample_dirichlet_alpha(S, rng);
    double sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      sum += a.alpha[s];
      mean[s] += a.alpha[s] / draws;
      sq += (a.alpha[s] - 1.0) * (a.alpha[s] - 1.0) / double(draws * S);
    }
    worst_sum = std::max(worst_sum, std::abs(sum - double(S)));
  }
  double worst_mean = 0.0;
  for (double m : mean) worst_mean = std::max(worst_mean, std::abs(m - 1.0));
  const double target = double(S - 1) / double(S + 1);
  v.require(worst_sum <= 1e-9, "sum off by " + fmt(worst_sum));
  v.require(worst_mean <= 0.02, "coordinate mean off by " + fmt(worst_mean));
  v.require(std::abs(sq - target) <= 0.02, "mean (alpha - 1)^2 = " + fmt(sq));

  constexpr std::size_t M = 200, mdraws = 20000;
  std::size_t zeros = 0;
  for (std::size_t d = 0; d < mdraws; ++d) {
    for (double c : bootstrap::sample_multinomial_alpha(M, rng).alpha) zeros += c == 0.0;
  }
  const double zero_frac = double(zeros) / double(M * mdraws);
  const double expected = std::pow(1.0 - 1.0 / M, double(M));
  v.require(std::abs(zero_frac - expected) <= 0.01, "zero-cell fraction " + fmt(zero_frac));
  const double took = seconds_since(t0);
  v.require(took < 30.0, "took " + fmt(took, 3) + " s");
  v.note("mean (alpha - 1)^2 " + fmt(sq) + " vs " + fmt(target) + ", zero cells " + fmt(zero_frac) + " vs " +
         fmt(expected) + ", " + fmt(took, 3) + " s");
}

void coverage_reproduction(Verdict& v) {
  const auto t0 = Clock::now();
  const auto cfg = ex::default_config(ex::ExperimentKind::regression_coverage);
  const auto rec = ex::run_regression_coverage(cfg);
  const double took = seconds_since(t0);
  const double nb = rec.summary["coverage"]["neuboots"].get<double>();
  const double sb = rec.summary["coverage"]["standard_bootstrap"].get<double>();
  v.require(nb >= 0.85 && nb <= 0.99, "NeuBoots coverage " + fmt(nb) + " outside [0.85, 0.99]");
  v.require(std::abs(nb - sb) <= 0.05, "NeuBoots " + fmt(nb) + " vs standard bootstrap " + fmt(sb));
  v.require(took < 900.0, "took " + fmt(took, 3) + " s");
  v.note("coverage NeuBoots " + fmt(nb) + ", standard bootstrap " + fmt(sb) + ", width " +
         fmt(rec.summary["mean_width"]["neuboots"].get<double>()) + " vs " +
         fmt(rec.summary["mean_width"]["standard_bootstrap"].get<double>()) + ", " + fmt(took, 3) + " s");
}

void bagging_ordering(Verdict& v) {
  const auto t0 = Clock::now();
  auto cfg = ex::default_config(ex::ExperimentKind::calibration);
  cfg.methods = {ex::Method::neuboots};
  cfg.B = 25;
  cfg.calibration.bagging_b = {1, 25};
  cfg.seeds.clear();
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
  const auto rec = ex::run_calibration(cfg);
  const double took = seconds_since(t0);
  const auto& by_b = rec.summary["neuboots_error_pct_by_B"];
  const double e1 = by_b["1"].get<double>(), e25 = by_b["25"].get<double>();
  v.require(e25 <= e1, "error at B = 25 " + fmt(e25) + "% above B = 1 " + fmt(e1) + "%");
  v.require(took < 300.0, "took " + fmt(took, 3) + " s");
  v.note("20 seeds: error " + fmt(e1) + "% at B = 1, " + fmt(e25) + "% at B = 25, " + fmt(took, 3) + " s");
}

void speed_pattern(Verdict& v) {
  const auto cfg = ex::default_config(ex::ExperimentKind::bench_speed);
  auto p = cfg.bench;
  p.b_values = {100};
  // Throws before any timing if the cached path disagrees with the naive loop.
  const auto r = ex::bench_prediction(p, cfg.dropout_p, 0).at(0);
  const double speedup = r.mc_dropout_seconds / r.cached_seconds;
  v.require(r.cache_max_abs_diff <= 1e-12, "cache difference " + fmt(r.cache_max_abs_diff));
  v.require(speedup >= 10.0, "speedup over MC dropout only " + fmt(speedup, 3) + "x");
  const auto o = ex::bench_training(p, cfg.sgd, 0);
  v.require(o.overhead() <= 0.15, "training overhead " + fmt(100.0 * o.overhead(), 3) + "%");
  v.note("depth " + std::to_string(p.depth) + ", S = " + std::to_string(p.width) + ", B = 100: " +
         fmt(speedup, 3) + "x faster than MC dropout, training overhead " + fmt(100.0 * o.overhead(), 3) + "%");
}

void ood_suite(Verdict& v) {
  auto cfg = ex::default_config(ex::ExperimentKind::ood);
  cfg.methods = {ex::Method::neuboots};
  cfg.ood.b_sweep = {cfg.B};
  cfg.seeds = {0, 1, 2, 3, 4};
  const std::string key = "neuboots/B=" + std::to_string(cfg.B);
  const double separable = ex::run_ood(cfg).summary["auroc"][key].get<double>();
  cfg.ood.shift = 0.0;
  const double null_task = ex::run_ood(cfg).summary["auroc"][key].get<double>();
  v.require(separable >= 0.95, "shifted AUROC " + fmt(separable));
  v.require(std::abs(null_task - 0.5) <= 0.05, "null AUROC " + fmt(null_task));

  const auto e = testing::expected_values();
  double worst = 0.0;
  for (const char* name : {"tied", "continuous", "separated"}) {
    const auto t = testing::fixture_table(std::string("detection_") + name + ".csv");
    std::vector<double> in, out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) (t.rows[i][1] == "1" ? in : out).push_back(testing::cell(t, i, 0));
    const auto m = metrics::detection_metrics(in, out);
    const auto& x = e["detection"][name];
    for (auto [got, want] : {std::pair{m.auroc, x["auroc"]}, {m.tnr_at_tpr95, x["tnr_at_tpr95"]},
                             {m.aupr_in, x["aupr_in"]}, {m.aupr_out, x["aupr_out"]},
                             {m.detection_accuracy, x["detection_accuracy"]}}) {
      worst = std::max(worst, std::abs(got - want.get<double>()));
    }
  }
  v.require(worst <= 1e-12, "detection fixtures off by " + fmt(worst));

  const auto t = testing::fixture_table("ood_ensembles.csv");
  const std::size_t b = e["ood"]["B"].get<std::size_t>(), k = (t.header.size() - 1) / 2;
  const std::size_t inputs = t.rows.size() / b;
  for (std::size_t i = 0; i < inputs; ++i) {
    Matrix logits(b, k), probs(b, k);
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        logits(r, j) = testing::cell(t, i * b + r, 1 + j);
        probs(r, j) = testing::cell(t, i * b + r, 1 + k + j);
      }
    }
    const auto f = metrics::ood_features(probs, logits);
    v.require(f.predictive_entropy >= f.expected_entropy, "Jensen fails on fixture input " + std::to_string(i));
  }
  v.note("AUROC shifted " + fmt(separable) + ", null " + fmt(null_task) + "; fixtures within " + fmt(worst) +
         "; entropy ordering holds on " + std::to_string(inputs) + " ensembles");
}

void metric_oracles(Verdict& v) {
  const auto e = testing::expected_values();
  double worst = 0.0;
  auto compare = [&](double got, const nlohmann::json& want, const std::string& what, double scale = 1.0) {
    const double d = std::abs(got - want.get<double>());
    worst = std::max(worst, d / scale);
    v.require(d <= 1e-12 * scale, what + " off by " + fmt(d));
  };

  const auto cal = testing::fixture_table("calibration_probs.csv");
  const std::size_t k = cal.header.size() - 1;
  Matrix probs(cal.rows.size(), k);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < cal.rows.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) probs(i, j) = testing::cell(cal, i, j);
    labels.push_back(std::stoul(cal.rows[i][k]));
  }
  compare(metrics::ece(probs, labels), e["calibration"]["ece"], "ece");
  compare(metrics::nll(probs, labels), e["calibration"]["nll"], "nll");
  compare(metrics::brier(probs, labels), e["calibration"]["brier"], "brier");

  const auto f1t = testing::fixture_table("f1_labels.csv");
  std::vector<std::size_t> pred, truth;
  for (const auto& r : f1t.rows) {
    pred.push_back(std::stoul(r[0]));
    truth.push_back(std::stoul(r[1]));
  }
  const auto f1 = metrics::per_class_f1(pred, truth, e["f1"]["num_classes"].get<std::size_t>());
  for (std::size_t c = 0; c < f1.size(); ++c) compare(f1[c], e["f1"]["f1"][c], "f1 class " + std::to_string(c));

  const auto dt = testing::fixture_table("diversity_predictions.csv");
  const std::size_t members = dt.header.size() - 1;
  std::vector<std::size_t> dtruth;
  std::vector<std::vector<std::size_t>> preds(members);
  for (const auto& r : dt.rows) {
    dtruth.push_back(std::stoul(r[0]));
    for (std::size_t b = 0; b < members; ++b) preds[b].push_back(std::stoul(r[b + 1]));
  }
  const auto d = metrics::diversity(preds, dtruth);
  const auto& de = e["diversity"];
  compare(d.ratio_error.value_or(NAN), de["ratio_error"], "ratio error", de["ratio_error"].get<double>());
  compare(d.q_statistic.value_or(NAN), de["q_statistic"], "Q statistic");
  compare(d.correlation.value_or(NAN), de["correlation"], "correlation");
  compare(d.disagreement, de["disagreement"], "disagreement");

  for (std::size_t kk : {2u, 4u, 8u}) {
    const Matrix uniform(3, kk, 1.0 / double(kk));
    const std::vector<std::size_t> y{0, kk - 1, 1};
    v.require(metrics::nll(uniform, y) == std::log(double(kk)), "uniform nll at k = " + std::to_string(kk));
    v.require(metrics::brier(uniform, y) == double(kk - 1) / double(kk), "uniform brier at k = " + std::to_string(kk));
  }
  v.note("calibration, F1 and diversity fixtures within " + fmt(worst) + "; uniform cases exact");
}

// Small configs of every kind, so the check stays quick.
ex::ExperimentConfig small_config(ex::ExperimentKind kind) {
  auto c = ex::default_config(kind);
  c.seeds = {7, 2};
  c.sgd.epochs = 10;
  c.dataset.n = std::min<std::size_t>(c.dataset.n, 150);
  c.dataset.test_n = 200;
  c.model.hidden = {16, 16};
  c.coverage.replications = 3;
  c.coverage.baseline_members = 4;
  c.ensemble_members = 3;
  c.active_learning.stages = 3;
  c.active_learning.pool = 150;
  c.ood.n_in = c.ood.n_out = 100;
  c.dataset.classification.counts = {20, 30, 40, 50, 60, 70, 80, 90, 100, 110};
  c.bench = {2, 16, 4, 3, 16, {1, 5}, 1, 64, 1};
  return c;
}

void reproducibility(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / "neuboots_acceptance_repro";
  std::size_t files = 0;
  for (auto kind : {ex::ExperimentKind::regression_coverage, ex::ExperimentKind::calibration,
                    ex::ExperimentKind::active_learning, ex::ExperimentKind::ood, ex::ExperimentKind::imbalanced,
                    ex::ExperimentKind::bench_speed}) {
    const std::string name(ex::to_string(kind));
    auto cfg = small_config(kind);
    fs::remove_all(root / name);
    for (const char* run : {"a", "b"}) {
      cfg.threads = run[0] == 'a' ? 1 : 2;
      ex::write_run(ex::run_experiment(cfg), root / name / run);
    }
    for (const auto& entry : fs::directory_iterator(root / name / "a")) {
      const auto file = entry.path().filename();
      if (file.extension() != ".csv" || file == "timings.csv") continue;
      ++files;
      v.require(testing::slurp(entry.path().string()) == testing::slurp((root / name / "b" / file).string()),
                name + "/" + file.string() + " differs between runs");
    }
  }
  fs::remove_all(root);
  v.note(std::to_string(files) + " metric CSVs over 6 experiment kinds identical across re-runs");
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Verdict&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "generator identity", generator_identity},   {2, "cache soundness", cache_soundness},
      {3, "gradient suite", gradient_suite},           {4, "weight laws", weight_laws},
      {5, "coverage reproduction", coverage_reproduction}, {6, "bagging ordering", bagging_ordering},
      {7, "speed pattern", speed_pattern},             {8, "OOD suite", ood_suite},
      {9, "metric oracles", metric_oracles},           {10, "reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("threw: ") + e.what());
    }
    failed += !v.passed();
    std::cout << (v.passed() ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << " (" << fmt(seconds_since(t0), 3)
              << " s): " << v.detail() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
