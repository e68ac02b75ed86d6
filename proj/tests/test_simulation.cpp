#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ipwm/scenario_io.hpp"
#include "ipwm/simulation.hpp"

using namespace ipwm;

namespace {

double corr(const std::vector<double>& x, int i, int j) {
  const std::size_t n = x.size() / kNumSimCovariates;
  double si = 0, sj = 0, sii = 0, sjj = 0, sij = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double a = x[r * kNumSimCovariates + i - 1], b = x[r * kNumSimCovariates + j - 1];
    si += a;
    sj += b;
    sii += a * a;
    sjj += b * b;
    sij += a * b;
  }
  const double m = static_cast<double>(n);
  const double ci = sii / m - si * si / m / m, cj = sjj / m - sj * sj / m / m;
  return (sij / m - si * sj / m / m) / std::sqrt(ci * cj);
}

}  // namespace

TEST(Scenario, Registry) {
  const ScenarioConfig s1 = scenario(1);
  EXPECT_EQ(s1.n, 5000u);
  EXPECT_FALSE(s1.exposure_misclassification);
  EXPECT_DOUBLE_EQ(s1.beta0, -3.85);
  EXPECT_DOUBLE_EQ(s1.gamma, -0.431);
  EXPECT_DOUBLE_EQ(s1.mu0, -2.0);
  EXPECT_DOUBLE_EQ(s1.alpha11, 0.0);

  const ScenarioConfig s7 = scenario(7);
  EXPECT_TRUE(s7.exposure_misclassification);
  EXPECT_DOUBLE_EQ(s7.alpha11, 4.0);

  EXPECT_EQ(scenario(10).n, 10000u);
  EXPECT_DOUBLE_EQ(scenario(10).beta0, -3.85);
  EXPECT_EQ(scenario(19).n, 5000u);
  EXPECT_DOUBLE_EQ(scenario(19).beta0, -2.0);
  EXPECT_DOUBLE_EQ(scenario(21).gamma, -0.641);
  const ScenarioConfig s36 = scenario(36);
  EXPECT_EQ(s36.n, 10000u);
  EXPECT_DOUBLE_EQ(s36.xi0, -2.5);
  EXPECT_TRUE(s36.exposure_misclassification);

  EXPECT_EQ(scenario("scenario-17").id, 17);
  EXPECT_EQ(scenario("32").id, 32);
  EXPECT_THROW(scenario(0), ConfigError);
  EXPECT_THROW(scenario(37), ConfigError);
  EXPECT_THROW(scenario("seven"), ConfigError);
}

TEST(Scenario, ValidationRejectsInconsistentConfigs) {
  ScenarioConfig c = scenario(1);
  c.alpha11 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = scenario(1);
  c.correlations.push_back({2, 2, 0.1});
  EXPECT_THROW(c.validate(), ConfigError);
  c = scenario(1);
  c.correlations = {{1, 2, 0.99}, {2, 3, 0.99}, {1, 3, -0.99}};
  EXPECT_THROW(CovariateSampler{c}, ConfigError);
  c = scenario(1);
  c.n = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Covariates, LatentCorrelationAndDichotomisation) {
  ScenarioConfig c = scenario(1);
  Rng rng = make_rng(31, {});
  const auto x = generate_covariates(100000, rng, c);
  for (int k : {1, 3, 5, 6, 8, 9})
    for (std::size_t r = 0; r < 1000; ++r) {
      const double v = x[r * kNumSimCovariates + k - 1];
      ASSERT_TRUE(v == 0.0 || v == 1.0);
    }
  const double biserial = 0.9 * std::sqrt(2.0 / std::numbers::pi);  // 0.9 phi(0) / 0.5
  EXPECT_NEAR(corr(x, 2, 6), biserial, 0.01);
  EXPECT_NEAR(corr(x, 4, 9), biserial, 0.01);
  EXPECT_NEAR(corr(x, 1, 5), 2.0 / std::numbers::pi * std::asin(0.2), 0.01);
  EXPECT_NEAR(corr(x, 1, 2), 0.0, 0.01);

  c.dichotomised.clear();
  Rng rng2 = make_rng(32, {});
  const auto y = generate_covariates(100000, rng2, c);
  EXPECT_NEAR(corr(y, 2, 6), 0.9, 0.005);
  EXPECT_NEAR(corr(y, 3, 8), 0.2, 0.01);
}

TEST(Generate, WiringOfSurrogatesAndValidation) {
  for (int id : {1, 5}) {
    const ScenarioConfig c = scenario(id);
    Rng rng = make_rng(4, {static_cast<std::uint64_t>(id)});
    const SimDataset sim = generate_dataset(c, rng);
    ASSERT_EQ(sim.data.size(), c.n);
    double z1 = 0, r1 = 0, agree = 0;
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
      const SimLatent& t = sim.latent[i];
      EXPECT_EQ(sim.data.z(i), t.u2);
      EXPECT_EQ(sim.data.b(i), id == 1 ? t.a : t.u1);
      EXPECT_EQ(sim.data.r_y(i), sim.data.r_a(i));
      if (sim.data.r_y(i)) {
        EXPECT_EQ(sim.data.y(i), t.y);
        EXPECT_EQ(sim.data.a(i), t.a);
      } else {
        EXPECT_EQ(sim.data.y(i), kMissing);
      }
      EXPECT_EQ(t.y, t.a ? t.y1 : t.y0);
      EXPECT_LE(t.y1, t.y0);  // gamma < 0 with a shared uniform
      z1 += sim.data.z(i);
      r1 += sim.data.r_y(i);
      agree += sim.data.b(i) == t.a;
    }
    const double n = static_cast<double>(c.n);
    EXPECT_NEAR(z1 / n, expit(-2.0), 0.015);
    EXPECT_GT(r1 / n, 0.1);
    if (id == 5) {
      EXPECT_LT(agree / n, 0.9);
    }
  }
}

TEST(Generate, ValidationFractionSpansTheReportedRange) {
  // High and low validation intercepts give roughly 32% and 16% validated.
  for (const auto& [id, target] : {std::pair{1, 0.32}, std::pair{4, 0.16}}) {
    double r1 = 0, n = 0;
    for (std::uint64_t k = 0; k < 10; ++k) {
      Rng rng = make_rng(40, {static_cast<std::uint64_t>(id), k});
      const SimDataset sim = generate_dataset(scenario(id), rng);
      for (std::size_t i = 0; i < sim.data.size(); ++i) r1 += sim.data.r_y(i);
      n += static_cast<double>(sim.data.size());
    }
    EXPECT_NEAR(r1 / n, target, 0.02) << "scenario " << id;
  }
}

TEST(Generate, Deterministic) {
  const ScenarioConfig c = scenario(8);
  Rng a = make_rng(77, {1}), b = make_rng(77, {1});
  const SimDataset x = generate_dataset(c, a), y = generate_dataset(c, b);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    ASSERT_EQ(x.data.b(i), y.data.b(i));
    ASSERT_EQ(x.data.cov(i, 1), y.data.cov(i, 1));
  }
}

TEST(Truth, ZeroEffectAndMonotonicity) {
  const ScenarioConfig c = scenario(1);
  Rng rng = make_rng(1, {});
  const MarginalTruth t(c, 20000, rng);
  EXPECT_NEAR(t.logor(0.0), 0.0, 1e-14);
  EXPECT_LT(t.logor(-1.0), t.logor(-0.5));
  // Marginal effect is attenuated relative to the conditional one.
  EXPECT_GT(t.logor(-0.431), -0.431);
  EXPECT_LT(t.logor(-0.431), 0.0);
  Rng small = make_rng(1, {});
  EXPECT_THROW(MarginalTruth(c, 100, small), InputError);
}

TEST(Truth, UnmeasuredConfounderIntegratedExactly) {
  // Compare the analytic U2 average with explicit simulation of U2.
  const ScenarioConfig c = scenario(3);
  Rng r1 = make_rng(5, {});
  const MarginalTruth t(c, 200000, r1);
  Rng r2 = make_rng(6, {});
  CovariateSampler sample(c);
  NormalSampler normal;
  double l[kNumSimCovariates], risk = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    sample(r2, normal, l);
    double e = c.beta0 + c.beta11 * (uniform01(r2) < expit(c.mu0));
    for (int k = 0; k < kNumSimCovariates; ++k) e += c.beta[k] * l[k];
    risk += expit(e + c.gamma);
  }
  EXPECT_NEAR(t.risk(1, c.gamma), risk / n, 0.002);
}

TEST(Truth, CalibrationHitsTarget) {
  const ScenarioConfig c = scenario(1);
  Rng a = make_rng(2, {});
  const double g = calibrate_gamma(c, -0.4, 0.005, 20000, a);
  Rng b = make_rng(2, {});
  EXPECT_NEAR(true_marginal_logor(c, g, 20000, b), -0.4, 1e-6);
  EXPECT_NEAR(g, c.gamma, 0.03);
  Rng d = make_rng(2, {});
  EXPECT_THROW(calibrate_gamma(c, -50.0, 0.005, 20000, d), NonBracketingError);
}

TEST(Metrics, Identities) {
  std::vector<ReplicateEstimate> reps(4);
  const double est[4] = {-0.5, -0.3, -0.4, -0.2};
  for (int r = 0; r < 4; ++r) {
    reps[r].log_or = est[r];
    BootstrapSummary b;
    b.se = 0.1 * (r + 1);
    b.ci_low = est[r] - 0.15;
    b.ci_high = est[r] + 0.15;
    reps[r].boot = b;
  }
  reps.push_back({std::nullopt, std::nullopt});
  const MetricsRow m = summarize_method(3, Method::kIPWM, -0.4, reps);
  EXPECT_EQ(m.nsim, 4u);
  EXPECT_EQ(m.failed, 1u);
  EXPECT_NEAR(m.bias, 0.05, 1e-15);
  const double se = std::sqrt((0.0225 + 0.0025 + 0.0025 + 0.0225) / 4);  // mean -0.35
  EXPECT_NEAR(m.se, se, 1e-15);
  EXPECT_NEAR(m.mse, se * se + 0.0025, 1e-15);
  EXPECT_NEAR(m.bse, se / 2, 1e-15);
  EXPECT_NEAR(m.sse, std::sqrt((0.01 + 0.04 + 0.09 + 0.16) / 4), 1e-15);
  EXPECT_NEAR(m.cp, 0.75, 1e-15);  // -0.2 +- 0.15 misses -0.4

  std::ostringstream out;
  write_metrics_csv(out, {m});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "scenario,method,bias,bse,mse,se,sse,cp,nsim");
  EXPECT_NE(out.str().find("\n3,IPWM,"), std::string::npos);
}

TEST(Study, DeterministicAndThreadIndependent) {
  ScenarioConfig c = scenario(5);
  c.n = 800;
  StudyOptions opt;
  opt.nsim = 3;
  opt.boot_b = 4;
  opt.threads = 1;
  const auto methods = parse_methods("Crude,IPWM");
  const StudyResult a = run_study(c, methods, opt);
  opt.threads = 3;
  const StudyResult b = run_study(c, methods, opt);
  ASSERT_EQ(a.metrics.size(), 2u);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(a.replicates[r][k].log_or, b.replicates[r][k].log_or);
      ASSERT_TRUE(a.replicates[r][k].boot.has_value());
      EXPECT_EQ(a.replicates[r][k].boot->ci_low, b.replicates[r][k].boot->ci_low);
    }
  std::ostringstream x, y;
  write_metrics_csv(x, a.metrics);
  write_metrics_csv(y, b.metrics);
  EXPECT_EQ(x.str(), y.str());
}

TEST(ScenarioJson, RoundTripAndOverrides) {
  const ScenarioConfig c = scenario(23);
  const ScenarioConfig back = scenario_from_json(scenario_to_json(c));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(c));

  const ScenarioConfig o = scenario_from_json(nlohmann::json{{"base", 7}, {"n", 1234}, {"gamma", -0.5}});
  EXPECT_EQ(o.n, 1234u);
  EXPECT_DOUBLE_EQ(o.gamma, -0.5);
  EXPECT_DOUBLE_EQ(o.alpha11, 4.0);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"sample_size", 10}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"n", "many"}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::array()), ConfigError);
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), ConfigError);
}

TEST(Oracle, StandardisedRisksByHand) {
  CellCountTable t(bit(Var::Y) | bit(Var::A) | bit(Var::L));
  // L=0: 60 units, risk 0.1 untreated (of 40), 0.25 treated (of 20)
  t.at(0, 0, 1, 0, 0) = 4;
  t.at(0, 0, 0, 0, 0) = 36;
  t.at(0, 0, 1, 1, 0) = 5;
  t.at(0, 0, 0, 1, 0) = 15;
  // L=1: 40 units, risk 0.5 untreated (of 10), 0.6 treated (of 30)
  t.at(0, 0, 1, 0, 1) = 5;
  t.at(0, 0, 0, 0, 1) = 5;
  t.at(0, 0, 1, 1, 1) = 18;
  t.at(0, 0, 0, 1, 1) = 12;
  const StandardizedRisks r = standardized_risks(t);
  EXPECT_NEAR(r.risk0, 0.6 * 0.1 + 0.4 * 0.5, 1e-15);
  EXPECT_NEAR(r.risk1, 0.6 * 0.25 + 0.4 * 0.6, 1e-15);
  t.at(0, 0, 1, 0, 1) = 0;
  t.at(0, 0, 0, 0, 1) = 0;
  EXPECT_THROW(standardized_risks(t), PositivityError);
}
