#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "neuboots/error.hpp"
#include "neuboots/generator/band.hpp"
#include "neuboots/metrics/calibration.hpp"
#include "neuboots/metrics/coverage.hpp"
#include "neuboots/metrics/detection.hpp"
#include "neuboots/metrics/diversity.hpp"
#include "neuboots/metrics/f1.hpp"
#include "neuboots/metrics/ood.hpp"
#include "neuboots/nn/dense_net.hpp"
#include "testing.hpp"

using namespace neuboots;
using namespace neuboots::metrics;

namespace {

struct ProbFixture {
  Matrix probs;
  std::vector<std::size_t> labels;
};

ProbFixture calibration_fixture() {
  const auto t = testing::fixture_table("calibration_probs.csv");
  const std::size_t k = t.header.size() - 1;
  ProbFixture f{Matrix(t.rows.size(), k), {}};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) f.probs(i, j) = testing::cell(t, i, j);
    f.labels.push_back(std::stoul(t.rows[i][k]));
  }
  return f;
}

void split_scores(const io::CsvTable& t, std::vector<double>& in, std::vector<double>& out) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    (t.rows[i][1] == "1" ? in : out).push_back(testing::cell(t, i, 0));
  }
}

// B x k random ensemble: probabilities and logits.
std::pair<Matrix, Matrix> random_ensemble(std::size_t b, std::size_t k, Rng& rng) {
  Matrix logits = testing::random_matrix(b, k, rng, 0.5 + 3.0 * rng.uniform());
  for (std::size_t j = 0; j < k; ++j) {
    const double shift = rng.normal(0.0, 2.0);
    for (std::size_t r = 0; r < b; ++r) logits(r, j) += shift;
  }
  Matrix probs = logits;
  nn::softmax_rows(probs);
  return {probs, logits};
}

generator::ConfidenceBand band_of(std::vector<double> lower, std::vector<double> upper) {
  generator::ConfidenceBand b;
  b.mean.resize(lower.size(), 0.0);
  b.lower = std::move(lower);
  b.upper = std::move(upper);
  return b;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("calibration metrics match the brute-force oracle") {
    const auto f = calibration_fixture();
    const auto e = testing::expected_values()["calibration"];
    CHECK(std::abs(ece(f.probs, f.labels) - e["ece"].get<double>()) <= 1e-12);
    CHECK(std::abs(nll(f.probs, f.labels) - e["nll"].get<double>()) <= 1e-12);
    CHECK(std::abs(brier(f.probs, f.labels) - e["brier"].get<double>()) <= 1e-12);
    CHECK(std::abs(error_rate(f.probs, f.labels) - e["error_rate"].get<double>()) <= 1e-12);
    const auto bins = reliability_bins(f.probs, f.labels);
    REQUIRE(bins.size() == 15);
    for (std::size_t b = 0; b < 15; ++b) {
      CHECK(bins[b].count == e["bin_counts"][b].get<std::size_t>());
      CHECK(bins[b].lower == double(b) / 15.0);
    }
    const auto report = calibration_report(f.probs, f.labels);
    CHECK(report.ece == doctest::Approx(100.0 * e["ece"].get<double>()).epsilon(1e-12));
    CHECK(report.brier == doctest::Approx(100.0 * e["brier"].get<double>()).epsilon(1e-12));
    CHECK(report.error_rate == doctest::Approx(100.0 * e["error_rate"].get<double>()).epsilon(1e-12));
  }

  TEST_CASE("calibration examples") {
    const Matrix perfect{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
    const std::vector<std::size_t> truth{0, 1, 0};
    CHECK(ece(perfect, truth) == 0.0);
    CHECK(nll(perfect, truth) == 0.0);
    CHECK(brier(perfect, truth) == 0.0);
    CHECK(error_rate(perfect, truth) == 0.0);

    Matrix ninety(10, 2);
    std::vector<std::size_t> half(10);
    for (std::size_t i = 0; i < 10; ++i) {
      ninety(i, 0) = 0.9;
      ninety(i, 1) = 0.1;
      half[i] = i % 2;
    }
    CHECK(ece(ninety, half) == doctest::Approx(0.4).epsilon(1e-14));

    for (std::size_t k : {2u, 4u, 8u}) {
      const Matrix uniform(2, k, 1.0 / double(k));
      const std::vector<std::size_t> y{0, k - 1};
      CHECK(nll(uniform, y) == std::log(double(k)));
      CHECK(brier(uniform, y) == double(k - 1) / double(k));
    }
    for (std::size_t k : {3u, 5u, 10u}) {
      const Matrix uniform(2, k, 1.0 / double(k));
      const std::vector<std::size_t> y{0, 1};
      CHECK(nll(uniform, y) == doctest::Approx(std::log(double(k))).epsilon(1e-15));
      CHECK(brier(uniform, y) == doctest::Approx(double(k - 1) / double(k)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(ece(Matrix(0, 2), std::vector<std::size_t>{}), DataError);
    CHECK_THROWS_AS(nll(perfect, std::vector<std::size_t>{0}), DimensionError);
  }

  TEST_CASE("ece ignores class relabeling") {
    const auto f = calibration_fixture();
    const std::vector<std::size_t> perm{2, 0, 4, 3, 1};
    Matrix permuted(f.probs.rows(), 5);
    std::vector<std::size_t> labels(f.labels.size());
    for (std::size_t i = 0; i < f.probs.rows(); ++i) {
      for (std::size_t j = 0; j < 5; ++j) permuted(i, perm[j]) = f.probs(i, j);
      labels[i] = perm[f.labels[i]];
    }
    CHECK(ece(permuted, labels) == doctest::Approx(ece(f.probs, f.labels)).epsilon(1e-14));
  }

  TEST_CASE("shrinking a calibrated set toward uniform raises ece") {
    // Confidence 0.8 right 8 of 10 times, 0.6 right 6 of 10 times.
    Matrix probs(20, 2);
    std::vector<std::size_t> labels(20);
    for (std::size_t i = 0; i < 20; ++i) {
      const double c = i < 10 ? 0.8 : 0.6;
      probs(i, 0) = c;
      probs(i, 1) = 1.0 - c;
      labels[i] = (i % 10) < (i < 10 ? 8u : 6u) ? 0 : 1;
    }
    CHECK(ece(probs, labels) == doctest::Approx(0.0).epsilon(1e-14));
    double prev = ece(probs, labels);
    for (double lambda : {0.8, 0.5, 0.2}) {
      Matrix shrunk = probs;
      for (double& p : shrunk.flat()) p = 0.5 + lambda * (p - 0.5);
      const double e = ece(shrunk, labels);
      CHECK(e > prev);
      prev = e;
    }
  }

  TEST_CASE("per-class F1 matches the oracle") {
    const auto t = testing::fixture_table("f1_labels.csv");
    std::vector<std::size_t> pred, truth;
    for (const auto& r : t.rows) {
      pred.push_back(std::stoul(r[0]));
      truth.push_back(std::stoul(r[1]));
    }
    const auto e = testing::expected_values()["f1"];
    const auto f1 = per_class_f1(pred, truth, e["num_classes"].get<std::size_t>());
    REQUIRE(f1.size() == e["f1"].size());
    for (std::size_t c = 0; c < f1.size(); ++c) CHECK(std::abs(f1[c] - e["f1"][c].get<double>()) <= 1e-12);
  }

  TEST_CASE("F1 examples") {
    const std::vector<std::size_t> y{0, 1, 2, 2, 1};
    CHECK(per_class_f1(y, y, 3) == std::vector<double>{1.0, 1.0, 1.0});
    const std::vector<std::size_t> never_two{0, 1, 1, 0, 1};
    CHECK(per_class_f1(never_two, y, 3)[2] == 0.0);
  }

  TEST_CASE("diversity matches the oracle") {
    const auto t = testing::fixture_table("diversity_predictions.csv");
    const std::size_t members = t.header.size() - 1;
    std::vector<std::size_t> truth;
    std::vector<std::vector<std::size_t>> preds(members);
    for (const auto& r : t.rows) {
      truth.push_back(std::stoul(r[0]));
      for (std::size_t b = 0; b < members; ++b) preds[b].push_back(std::stoul(r[b + 1]));
    }
    const auto e = testing::expected_values()["diversity"];
    const auto d = diversity(preds, truth);
    CHECK(d.pairs == e["pairs"].get<std::size_t>());
    REQUIRE(d.ratio_error);
    REQUIRE(d.q_statistic);
    REQUIRE(d.correlation);
    CHECK(std::abs(*d.ratio_error - e["ratio_error"].get<double>()) <= 1e-12 * e["ratio_error"].get<double>());
    CHECK(std::abs(*d.q_statistic - e["q_statistic"].get<double>()) <= 1e-12);
    CHECK(std::abs(*d.correlation - e["correlation"].get<double>()) <= 1e-12);
    CHECK(std::abs(d.disagreement - e["disagreement"].get<double>()) <= 1e-12);

    for (std::size_t a = 0; a < members; ++a) {
      for (std::size_t b = a + 1; b < members; ++b) {
        const auto c = pair_contingency(preds[a], preds[b], truth);
        const auto q = q_statistic(c);
        const auto r = correlation(c);
        if (q && r) CHECK((*q > 0) == (*r > 0));
        if (q) CHECK(std::abs(*q) <= 1.0);
        if (r) CHECK(std::abs(*r) <= 1.0);
      }
    }
  }

  TEST_CASE("diversity examples") {
    const std::vector<std::size_t> truth{0, 1, 2, 0, 1, 2};
    const std::vector<std::size_t> mixed{0, 1, 0, 0, 2, 2};
    std::vector<std::vector<std::size_t>> same{mixed, mixed};
    const auto d = diversity(same, truth);
    CHECK(d.q_statistic == std::optional<double>(1.0));
    CHECK(d.correlation == std::optional<double>(1.0));
    CHECK(d.disagreement == 0.0);
    CHECK(d.ratio_error == std::optional<double>(0.0));

    const std::vector<std::size_t> wrong{1, 2, 0, 1, 2, 0};
    std::vector<std::vector<std::size_t>> opposite{truth, wrong};
    const auto o = diversity(opposite, truth);
    const auto c = pair_contingency(truth, wrong, truth);
    CHECK(c.both_correct == 0);
    CHECK(c.both_wrong == 0);
    CHECK(c.first_only == 6);
    CHECK(o.disagreement == 1.0);
    CHECK_FALSE(o.q_statistic.has_value());
    CHECK_FALSE(o.correlation.has_value());
    CHECK_FALSE(o.ratio_error.has_value());
    CHECK(o.q_statistic_skipped == 1);
    CHECK(o.correlation_skipped == 1);
    CHECK(o.ratio_error_skipped == 1);

    std::vector<std::vector<std::size_t>> lonely{truth};
    CHECK_THROWS(diversity(lonely, truth));
  }

  TEST_CASE("detection metrics match the exhaustive sweep") {
    const auto e = testing::expected_values()["detection"];
    for (const char* name : {"tied", "continuous", "separated"}) {
      CAPTURE(name);
      std::vector<double> in, out;
      split_scores(testing::fixture_table(std::string("detection_") + name + ".csv"), in, out);
      const auto m = detection_metrics(in, out);
      const auto& x = e[name];
      CHECK(std::abs(m.auroc - x["auroc"].get<double>()) <= 1e-12);
      CHECK(std::abs(m.tnr_at_tpr95 - x["tnr_at_tpr95"].get<double>()) <= 1e-12);
      CHECK(std::abs(m.aupr_in - x["aupr_in"].get<double>()) <= 1e-12);
      CHECK(std::abs(m.aupr_out - x["aupr_out"].get<double>()) <= 1e-12);
      CHECK(std::abs(m.detection_accuracy - x["detection_accuracy"].get<double>()) <= 1e-12);
      CHECK(m.detection_accuracy >= 0.5);

      // Strictly monotone transforms change nothing.
      for (auto f : {+[](double s) { return std::exp(s / 3.0); }, +[](double s) { return s * s * s - 4.0; }}) {
        std::vector<double> ti(in), to(out);
        std::transform(ti.begin(), ti.end(), ti.begin(), f);
        std::transform(to.begin(), to.end(), to.begin(), f);
        const auto t = detection_metrics(ti, to);
        CHECK(t.auroc == doctest::Approx(m.auroc).epsilon(1e-14));
        CHECK(t.tnr_at_tpr95 == doctest::Approx(m.tnr_at_tpr95).epsilon(1e-14));
        CHECK(t.aupr_in == doctest::Approx(m.aupr_in).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("detection examples") {
    const std::vector<double> s{0.1, 0.4, 0.4, 0.9, 0.3};
    CHECK(detection_metrics(s, s).auroc == doctest::Approx(0.5).epsilon(1e-15));
    const auto sep = detection_metrics(std::vector<double>{2.0, 3.0, 2.5}, std::vector<double>{0.0, 1.0});
    CHECK(sep.auroc == 1.0);
    CHECK(sep.tnr_at_tpr95 == 1.0);
    CHECK(sep.detection_accuracy == 1.0);
    CHECK(sep.aupr_in == 1.0);
    const auto flipped = detection_metrics(std::vector<double>{0.0, 1.0}, std::vector<double>{2.0, 3.0});
    CHECK(flipped.auroc == 0.0);
    CHECK(flipped.detection_accuracy == 0.5);
    CHECK_THROWS_AS(detection_metrics({}, s), DataError);
    CHECK_THROWS_AS(detection_metrics(std::vector<double>{std::nan("")}, s), DataError);
    const auto pts = roc_sweep(s, std::vector<double>{0.0});
    CHECK(std::isinf(pts.front().threshold));
    CHECK(pts.back().tpr == 1.0);
  }

  TEST_CASE("ood features match the oracle and obey Jensen") {
    const auto t = testing::fixture_table("ood_ensembles.csv");
    const auto e = testing::expected_values()["ood"];
    const std::size_t b = e["B"].get<std::size_t>();
    const std::size_t k = (t.header.size() - 1) / 2;
    const auto& expected = e["features"];
    REQUIRE(t.rows.size() == b * expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      Matrix logits(b, k), probs(b, k);
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
          logits(r, j) = testing::cell(t, i * b + r, 1 + j);
          probs(r, j) = testing::cell(t, i * b + r, 1 + k + j);
        }
      }
      const auto f = ood_features(probs, logits);
      const auto& x = expected[i];
      CHECK(std::abs(f.max_predictive_mean - x["max_predictive_mean"].get<double>()) <= 1e-12);
      CHECK(std::abs(f.logit_std - x["logit_std"].get<double>()) <= 1e-12);
      CHECK(std::abs(f.expected_entropy - x["expected_entropy"].get<double>()) <= 1e-12);
      CHECK(std::abs(f.predictive_entropy - x["predictive_entropy"].get<double>()) <= 1e-12);
      CHECK(f.predictive_entropy >= f.expected_entropy);
    }
  }

  TEST_CASE("random ensembles obey the feature invariants") {
    Rng rng(21);
    for (int trial = 0; trial < 500; ++trial) {
      const auto [probs, logits] = random_ensemble(2 + rng.below(30), 2 + rng.below(8), rng);
      const auto f = ood_features(probs, logits);
      CHECK(f.predictive_entropy >= f.expected_entropy - 1e-15);
      CHECK(f.expected_entropy >= 0.0);
      CHECK(f.max_predictive_mean > 0.0);
      CHECK(f.max_predictive_mean <= 1.0);
      CHECK(f.logit_std >= 0.0);
    }
  }

  TEST_CASE("identical ensemble members carry no spread") {
    Matrix logits(5, 3);
    for (std::size_t r = 0; r < 5; ++r) {
      logits(r, 0) = 1.0;
      logits(r, 1) = -0.5;
      logits(r, 2) = 2.0;
    }
    Matrix probs = logits;
    nn::softmax_rows(probs);
    const auto f = ood_features(probs, logits);
    CHECK(f.logit_std == 0.0);
    CHECK(f.expected_entropy == doctest::Approx(f.predictive_entropy).epsilon(1e-15));
    CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
    CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("the detector matches an independent optimizer") {
    const auto t = testing::fixture_table("detector_features.csv");
    const std::size_t d = t.header.size() - 1;
    std::vector<std::vector<double>> in, out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = testing::cell(t, i, j);
      (t.rows[i][d] == "1" ? in : out).push_back(row);
    }
    auto to_matrix = [d](const std::vector<std::vector<double>>& rows) {
      Matrix m(rows.size(), d);
      for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
      return m;
    };
    const auto e = testing::expected_values()["detector"];
    const auto model = fit_detector(to_matrix(in), to_matrix(out));
    CHECK(model.regularization == e["regularization"].get<double>());
    for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(model.weights[j] - e["weights"][j].get<double>()) <= 1e-4);
    CHECK(std::abs(model.bias - e["bias"].get<double>()) <= 1e-4);
    CHECK(model.gradient_norm < 1e-8);
  }

  TEST_CASE("logistic objective gradient matches central differences") {
    Rng rng(22);
    const Matrix z = testing::random_matrix(30, 3, rng);
    std::vector<double> y(30);
    for (double& v : y) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
    std::vector<double> w{0.3, -0.7, 1.1};
    const double b = 0.2, lambda = 0.05, h = 1e-6;
    const auto obj = logistic_objective(z, y, w, b, lambda);
    for (std::size_t j = 0; j <= 3; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < 3) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double numeric = (logistic_objective(z, y, wp, bp, lambda).value -
                              logistic_objective(z, y, wm, bm, lambda).value) / (2.0 * h);
      CHECK(obj.gradient[j] == doctest::Approx(numeric).epsilon(1e-6));
    }
  }

  TEST_CASE("mirrored data gives a zero bias") {
    Rng rng(23);
    Matrix in = testing::random_matrix(80, 4, rng);
    for (std::size_t i = 0; i < 80; ++i) in(i, 0) += 1.5;
    Matrix out = in;
    for (double& v : out.flat()) v = -v;
    const auto model = fit_detector(in, out);
    CHECK(std::abs(model.bias) <= 1e-6);
    CHECK(model.weights[0] > 0.0);
  }

  TEST_CASE("perfect separation still yields a finite detector") {
    Matrix in(20, 1), out(20, 1);
    for (std::size_t i = 0; i < 20; ++i) {
      in(i, 0) = 1.0 + 0.1 * double(i);
      out(i, 0) = -1.0 - 0.1 * double(i);
    }
    DetectorOptions opts;
    opts.max_iterations = 50;
    const auto model = fit_detector(in, out, opts);
    CHECK(model.iterations <= 50);
    CHECK(std::isfinite(model.bias));
    CHECK(std::isfinite(model.weights[0]));
    std::vector<double> s_in, s_out;
    for (std::size_t i = 0; i < 20; ++i) {
      s_in.push_back(model.score(in.row(i)));
      s_out.push_back(model.score(out.row(i)));
    }
    CHECK(detection_metrics(s_in, s_out).auroc == 1.0);
    CHECK_THROWS_AS(fit_detector(in, Matrix(0, 1)), DataError);
    CHECK_THROWS_AS(fit_detector(in, Matrix(3, 2)), DimensionError);
  }

  TEST_CASE("coverage examples") {
    const std::vector<double> truth{0.0, 1.0, -2.0};
    const double big = 1e300;
    const auto wide = band_of({-big, -big, -big}, {big, big, big});
    const auto off = band_of({5.0, 5.0, 5.0}, {5.0, 5.0, 5.0});
    const auto half = band_of({-1.0, 2.0, -3.0}, {1.0, 3.0, -2.0});
    CHECK(coverage_rate(std::vector{wide}, truth).mean == 1.0);
    CHECK(coverage_rate(std::vector{off}, truth).mean == 0.0);
    const auto s = coverage_rate(std::vector{wide, off, half}, truth);
    CHECK(s.replications == 3);
    CHECK(s.per_point == std::vector<double>{2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0});
    CHECK(band_covers(half, truth) == std::vector<std::uint8_t>{1, 0, 1});
  }

  TEST_CASE("exact linear-model bands cover at the nominal rate") {
    // y = 1 + 2x + N(0, 0.5^2) on a fixed design; each replication's band is
    // built from draws of the exact sampling law of the least-squares fit.
    Rng rng(24);
    constexpr std::size_t n = 40, replications = 200, draws = 1000;
    constexpr double sigma = 0.5;
    const std::vector<double> grid{-1.0, -0.3, 0.0, 0.6, 1.2};
    std::vector<double> x(n), truth;
    for (std::size_t i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * double(i) / double(n - 1);
    for (double g : grid) truth.push_back(1.0 + 2.0 * g);
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double sxx = 0.0;
    for (double v : x) sxx += (v - xbar) * (v - xbar);

    std::vector<generator::ConfidenceBand> bands;
    for (std::size_t r = 0; r < replications; ++r) {
      double ybar = 0.0, sxy = 0.0;
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = 1.0 + 2.0 * x[i] + sigma * rng.normal();
        ybar += y[i] / n;
      }
      for (std::size_t i = 0; i < n; ++i) sxy += (x[i] - xbar) * (y[i] - ybar);
      const double slope = sxy / sxx;
      generator::PredictionEnsemble ens(draws, grid.size(), 1, false);
      for (std::size_t b = 0; b < draws; ++b) {
        // Independent intercept-at-mean and slope errors.
        const double e0 = sigma / std::sqrt(double(n)) * rng.normal();
        const double e1 = sigma / std::sqrt(sxx) * rng.normal();
        for (std::size_t g = 0; g < grid.size(); ++g) {
          ens.sample(b, g)[0] = ybar + slope * (grid[g] - xbar) + e0 + e1 * (grid[g] - xbar);
        }
      }
      bands.push_back(generator::confidence_band(ens, 0.95));
    }
    CHECK(std::abs(coverage_rate(bands, truth).mean - 0.95) <= 0.04);
  }

  TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax(std::vector<double>{0.2, 0.4, 0.4}) == 1);
    CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("four-sample nll, brier and error by hand") {
    const Matrix probs{{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.25, 0.25, 0.5}, {0.5, 0.5, 0.0}};
    const std::vector<std::size_t> labels{0, 2, 2, 1};
    CHECK(nll(probs, labels) ==
          doctest::Approx(-(std::log(0.7) + std::log(0.3) + 2.0 * std::log(0.5)) / 4.0).epsilon(1e-15));
    // (0.14 + 0.86 + 0.375 + 0.5) / 4
    CHECK(brier(probs, labels) == doctest::Approx(0.46875).epsilon(1e-15));
    // Row 2 predicts class 1; row 4 ties and falls to class 0.
    CHECK(error_rate(probs, labels) == 0.5);
  }

  TEST_CASE("three-member diversity by hand") {
    const std::vector<std::size_t> truth{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    const std::vector<std::vector<std::size_t>> members{
        {0, 1, 2, 0, 1, 2, 0, 1, 0, 1},
        {0, 1, 0, 0, 1, 2, 2, 1, 2, 0},
        {1, 1, 1, 2, 1, 2, 0, 0, 2, 0},
    };
    // (N11, N10, N01, N00): (6, 2, 2, 0), (4, 4, 2, 0), (5, 3, 1, 1).
    const auto c = pair_contingency(members[1], members[2], truth);
    CHECK(c.both_correct == 5);
    CHECK(c.first_only == 3);
    CHECK(c.second_only == 1);
    CHECK(c.both_wrong == 1);
    const auto d = diversity(members, truth);
    CHECK(d.pairs == 3);
    REQUIRE(d.ratio_error);
    CHECK(*d.ratio_error == 400.0);
    CHECK(d.ratio_error_skipped == 2);
    CHECK(*d.q_statistic == doctest::Approx((-1.0 - 1.0 + 0.25) / 3.0).epsilon(1e-15));
    CHECK(*d.correlation == doctest::Approx((-0.25 - 6.0 / std::sqrt(384.0)) / 3.0).epsilon(1e-15));
    CHECK(d.disagreement == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("two-sample binary ood features by hand") {
    const double l3 = std::log(3.0);
    const Matrix logits{{0.0, l3}, {l3, 0.0}};
    const Matrix probs{{0.25, 0.75}, {0.75, 0.25}};
    const auto f = ood_features(probs, logits);
    CHECK(f.max_predictive_mean == 0.5);
    CHECK(f.predictive_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(f.expected_entropy == doctest::Approx(-(0.25 * std::log(0.25) + 0.75 * std::log(0.75))).epsilon(1e-15));
    CHECK(f.logit_std == doctest::Approx(l3 / std::sqrt(2.0)).epsilon(1e-15));
  }

  TEST_CASE("six-point detection sweep by hand") {
    const std::vector<double> in{0.9, 0.8, 0.4}, out{0.7, 0.4, 0.1};
    const auto m = detection_metrics(in, out);
    // 7.5 of 9 pairs ordered, the 0.4 tie counting one half.
    CHECK(m.auroc == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(m.tnr_at_tpr95 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m.detection_accuracy == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(m.aupr_in == doctest::Approx(13.0 / 15.0).epsilon(1e-15));
    CHECK(m.aupr_out == doctest::Approx(29.0 / 36.0).epsilon(1e-15));
  }

  TEST_CASE("three-class F1 from a hand confusion matrix") {
    const std::vector<std::size_t> truth{0, 0, 0, 1, 1, 1, 2, 2, 2};
    const std::vector<std::size_t> pred{0, 0, 1, 1, 1, 2, 2, 1, 2};
    // tp/fp/fn: class 0 2/0/1, class 1 2/2/1, class 2 2/1/1.
    const auto f1 = per_class_f1(pred, truth, 3);
    CHECK(f1[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(f1[1] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(f1[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }
}
