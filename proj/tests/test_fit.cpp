// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "moelever/errors.hpp"
#include "moelever/fit.hpp"
#include "moelever/laws.hpp"

using namespace moelever;

namespace {

std::vector<std::pair<double, double>> sample_law(const PowerLaw& law, double x_min, double x_max,
                                                  int n) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < n; ++i) {
    const double x = x_min * std::pow(x_max / x_min, static_cast<double>(i) / (n - 1));
    pts.emplace_back(x, law(x));
  }
  return pts;
}

// the grid the default coefficients were validated on: expert-count sweep
// ratios, granularities 2..16, budgets 2e18..6e20
std::vector<ELObservation> synthetic_el_grid(const ELCoefficients& coeffs) {
  std::vector<ELObservation> obs;
  for (int experts : {2, 4, 8, 16, 32, 64, 128, 256}) {
    const double A = 3.0 / (experts + 1);
    for (double G : {2.0, 4.0, 6.0, 8.0, 12.0, 16.0}) {
      for (double C : {2e18, 6e18, 2e19, 6e19, 2e20, 6e20}) {
        obs.push_back({A, G, C, el_joint(A, G, C, coeffs)});
      }
    }
  }
  return obs;
}

}  // namespace

TEST_CASE("power-law fit recovers exact data") {
  const PowerLaw truth{2.0, 0.5};
  const auto fit = fit_power_law(sample_law(truth, 1.0, 1e6, 12));
  CHECK(fit.law.k == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.law.p == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(fit.report.converged);
  CHECK(fit.report.train_count == 12);
}

TEST_CASE("power-law fit recovers the dense allocation constants") {
  const PowerLaw truth = default_alloc_M(ModelFamily::dense);  // 0.0655 * C^0.5422
  const auto fit = fit_power_law(sample_law(truth, 1e18, 1e21, 10));
  CHECK(std::abs(fit.law.k - truth.k) / truth.k < 1e-3);
  CHECK(std::abs(fit.law.p - truth.p) / truth.p < 1e-3);
}

TEST_CASE("power-law fit under multiplicative noise") {
  const PowerLaw truth = default_alloc_M(ModelFamily::dense);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto runs = synth_runs(truth, 20, 0.10, seed, 1e17, 1e23);
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : runs) pts.emplace_back(r.C, r.M);
    const auto fit = fit_power_law(pts);
    CHECK(std::abs(fit.law.p - truth.p) <= 0.03);
  }
}

TEST_CASE("power-law fit is scale covariant in log space") {
  const auto pts = sample_law({0.37, -0.21}, 1e3, 1e9, 15);
  auto scaled = pts;
  for (auto& [x, y] : scaled) y *= 1234.5;
  const auto base = fit_power_law(pts);
  const auto shifted = fit_power_law(scaled);
  CHECK(std::abs(base.law.p - shifted.law.p) < 1e-9);
  CHECK(shifted.law.k / base.law.k == doctest::Approx(1234.5).epsilon(1e-6));
}

TEST_CASE("power-law fit input contract") {
  std::vector<std::pair<double, double>> two = {{1.0, 1.0}, {2.0, 2.0}};
  CHECK_THROWS_AS((void)fit_power_law(two), FitError);
  std::vector<std::pair<double, double>> bad = {{1.0, 1.0}, {2.0, -2.0}, {3.0, 3.0}};
  CHECK_THROWS_AS((void)fit_power_law(bad), ValidationError);
}

TEST_CASE("log-polynomial fit recovers exact data") {
  const LogPolyLaw truth{0.35, -0.045, -2.0 * std::log2(11.3)};
  std::vector<std::pair<double, double>> pts;
  for (double g = 1.0; g <= 40.0; g *= 1.35) pts.emplace_back(g, el_separable_G(g, truth));
  const auto fit = fit_log_polynomial(pts);
  CHECK(fit.law.a_G == doctest::Approx(truth.a_G).epsilon(1e-6));
  CHECK(fit.law.b_G == doctest::Approx(truth.b_G).epsilon(1e-6));
  CHECK(fit.law.c_G == doctest::Approx(truth.c_G).epsilon(1e-6));

  // fitted interior maximum lands within 5% of the generator's
  const double g_star = std::pow(2.0, -fit.law.c_G / 2.0);
  CHECK(std::abs(g_star - 11.3) / 11.3 < 0.05);
}

TEST_CASE("log-polynomial fit flags data without an interior optimum") {
  std::vector<std::pair<double, double>> rising;
  for (double g = 1.0; g <= 32.0; g *= 2.0) rising.emplace_back(g, 1.0 + 0.2 * std::log2(g));
  const auto fit = fit_log_polynomial(rising);
  const bool flagged = std::any_of(fit.report.notes.begin(), fit.report.notes.end(),
                                   [](const std::string& n) {
                                     return n.find("no interior optimum") != std::string::npos;
                                   });
  CHECK(flagged);

  std::vector<std::pair<double, double>> three(rising.begin(), rising.begin() + 3);
  CHECK_THROWS_AS((void)fit_log_polynomial(three), FitError);
}

TEST_CASE("joint EL fit round-trips the default coefficients") {
  const ELCoefficients truth;
  const auto obs = synthetic_el_grid(truth);
  const auto fit = fit_el_joint(obs, 6.0);

  CHECK(fit.report.converged);
  CHECK(fit.report.train_count + fit.report.validation_count == static_cast<int>(obs.size()));
  CHECK(fit.report.validation_count > 0);
  // held-out high-leverage points are predicted within 1 percent
  CHECK(fit.report.validation_relative_error < 0.01);
  // extrapolation stays within a small multiple of the training error
  CHECK(fit.report.validation_relative_error <=
        std::max(3.0 * fit.report.train_relative_error, 1e-6));

  const auto g_star = optimal_granularity(fit.coefficients);
  REQUIRE(g_star.has_value());
  CHECK(*g_star > 10.0);
  CHECK(*g_star < 13.0);
}

TEST_CASE("joint EL fit split errors") {
  const ELCoefficients truth;
  auto obs = synthetic_el_grid(truth);

  std::vector<ELObservation> high;
  for (const auto& o : obs)
    if (o.EL >= 6.0) high.push_back(o);
  CHECK_THROWS_AS((void)fit_el_joint(high, 6.0), FitError);  // empty training set

  std::vector<ELObservation> low;
  for (const auto& o : obs)
    if (o.EL < 6.0) low.push_back(o);
  CHECK_THROWS_AS((void)fit_el_joint(low, 6.0), FitError);  // empty validation set
}

TEST_CASE("near-optimal filter") {
  const auto rec = [](double c, double loss) {
    RunRecord r;
    r.C = c;
    r.M = 1.0;
    r.D = c;
    r.loss = loss;
    return r;
  };
  const std::vector<RunRecord> runs = {rec(1e19, 2.000), rec(1e19, 2.004), rec(1e19, 2.010),
                                       rec(1e20, 3.5)};
  const auto kept = near_optimal_filter(runs);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].loss == 2.000);
  CHECK(kept[1].loss == 2.004);  // cutoff is 2.005
  CHECK(kept[2].loss == 3.5);    // single-run group is kept

  // idempotent, and the group minimum always survives
  const auto twice = near_optimal_filter(kept);
  REQUIRE(twice.size() == kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) CHECK(twice[i].loss == kept[i].loss);

  const std::vector<RunRecord> ties = {rec(5e18, 1.5), rec(5e18, 1.5), rec(5e18, 1.7)};
  CHECK(near_optimal_filter(ties).size() == 2);  // ties at the minimum all kept
}

TEST_CASE("EL from loss curves") {
  const PowerLaw dense{10.0, -0.05};

  // an MoE curve identical to the dense curve has leverage 1 everywhere
  std::vector<RunRecord> moe;
  for (double c = 1e18; c <= 1e21; c *= 10.0) {
    RunRecord r;
    r.C = c;
    r.M = 1.0;
    r.D = c;
    r.loss = dense(c);
    r.A = 0.05;
    r.G = 8.0;
    moe.push_back(r);
  }
  for (const auto& o : el_from_loss_curves(moe, dense))
    CHECK(o.EL == doctest::Approx(1.0).epsilon(1e-9));

  // constructed so the dense curve reaches the loss at exactly twice the compute
  RunRecord twice;
  twice.C = 1e19;
  twice.M = 1.0;
  twice.D = 1e19;
  twice.loss = 10.0 * std::pow(2e19, -0.05);
  const auto obs = el_from_loss_curves({twice}, dense);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].EL == doctest::Approx(2.0).epsilon(1e-9));

  CHECK_THROWS_AS((void)el_from_loss_curves(moe, PowerLaw{10.0, 0.05}), ValidationError);
}

TEST_CASE("EL from loss curves matches the closed form") {
  const PowerLaw dense{26.0, -0.054};
  const PowerLaw moe_curve{25.22, -0.05454};
  const double beta_d = -dense.p;
  const double beta_m = -moe_curve.p;

  std::vector<RunRecord> runs;
  for (int i = 0; i < 50; ++i) {
    const double c = 1e18 * std::pow(1e3, i / 49.0);
    RunRecord r;
    r.C = c;
    r.M = std::sqrt(c);
    r.D = std::sqrt(c);
    r.loss = moe_curve(c);
    runs.push_back(r);
  }
  const auto obs = el_from_loss_curves(runs, dense);
  REQUIRE(obs.size() == 50);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double c = runs[i].C;
    const double expected =
        std::pow(dense.k / moe_curve.k, 1.0 / beta_d) * std::pow(c, beta_m / beta_d - 1.0);
    CHECK(std::abs(obs[i].EL - expected) / expected < 1e-6);
  }

  // leverage rises along a curve that decays faster than the dense reference
  for (std::size_t i = 1; i < obs.size(); ++i) CHECK(obs[i].EL > obs[i - 1].EL);
}

TEST_CASE("EL from loss curves skips unreachable losses") {
  RunRecord bad;
  bad.C = 1e19;
  bad.M = 1.0;
  bad.D = 1e19;
  bad.loss = 0.0;
  std::vector<std::string> warnings;
  const auto obs = el_from_loss_curves({bad}, PowerLaw{10.0, -0.05}, &warnings);
  CHECK(obs.empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("skipped") != std::string::npos);
}

TEST_CASE("EL from matched runs") {
  const auto rec = [](double c, double loss) {
    RunRecord r;
    r.C = c;
    r.M = 1.0;
    r.D = c;
    r.loss = loss;
    r.A = 0.05;
    r.G = 8.0;
    return r;
  };
  const std::vector<RunRecord> dense = {rec(1e19, 2.5), rec(2e19, 2.4), rec(4e19, 2.3)};
  std::vector<std::string> warnings;
  const auto obs = el_from_matched_runs({rec(1e19, 2.401)}, dense, 0.01, &warnings);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].EL == doctest::Approx(2.0));
  CHECK(el_from_matched_runs({rec(1e19, 2.0)}, dense, 0.01, &warnings).empty());
  CHECK(warnings.size() == 1);
}

TEST_CASE("synthetic runs are deterministic") {
  const PowerLaw law{0.1915, 0.5095};
  const auto a = synth_runs(law, 25, 0.05, 42);
  const auto b = synth_runs(law, 25, 0.05, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].C == b[i].C);
    CHECK(a[i].M == b[i].M);
    CHECK(a[i].D == b[i].D);
    CHECK(a[i].loss == b[i].loss);
  }
  const auto c = synth_runs(law, 25, 0.05, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_different = any_different || a[i].M != c[i].M;
  CHECK(any_different);

  // zero noise reproduces the law exactly and the records are self-consistent
  const auto clean = synth_runs(law, 10, 0.0, 7, 1e18, 1e21);
  for (const auto& r : clean) {
    CHECK(r.M == law(r.C));
    CHECK(std::abs(r.C - r.M * r.D) <= 1e-6 * r.C);
  }
}
