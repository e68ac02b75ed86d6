#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ipwm/anchors.hpp"
#include "ipwm/estimators.hpp"
#include "ipwm/reinfarction.hpp"
#include "ipwm/rng.hpp"
#include "ipwm/simulation.hpp"

using namespace ipwm;

TEST(Shrink, KeepsProportionsInsideAndOrdered) {
  EXPECT_GT(shrink(0.0, 1e6), 0.0);
  EXPECT_LT(shrink(1.0, 1e6), 1.0);
  EXPECT_DOUBLE_EQ(shrink(0.5, 10), 0.5);
  EXPECT_LT(shrink(0.2, 1e6), shrink(0.2000001, 1e6));
  EXPECT_NEAR(shrink(0.3, 1e6), 0.3, 1e-6);
  EXPECT_THROW(shrink(0.3, 0.0), InputError);
}

TEST(Methods, Parsing) {
  EXPECT_EQ(parse_methods("all").size(), 5u);
  EXPECT_EQ(parse_methods("ipwm,gp,IPWM"), (std::vector<Method>{Method::kIPWM, Method::kGP}));
  EXPECT_EQ(parse_method("crude"), Method::kCrude);
  EXPECT_THROW(parse_methods("IPW"), ConfigError);
  EXPECT_THROW(parse_methods(","), ConfigError);
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(WeightedOr, ByHand) {
  // group 1: outcomes 1,0 weights 3,1 ; group 0: outcomes 1,0,0 weights 1,1,2
  const std::vector<int> y{1, 0, 1, 0, 0}, g{1, 1, 0, 0, 0};
  const std::vector<double> w{3, 1, 1, 1, 2};
  const ORResult h = weighted_or(y, g, w, 1e12, Normalization::kWeightSum);
  EXPECT_NEAR(h.p1, 0.75, 1e-15);
  EXPECT_NEAR(h.p0, 0.25, 1e-15);
  EXPECT_NEAR(h.log_or, std::log(9.0), 1e-9);
  const ORResult n = weighted_or(y, g, w, 1e12, Normalization::kGroupSize);
  EXPECT_NEAR(n.p1, 1.0, 1e-15);  // 3/2 clamped
  EXPECT_NEAR(n.p0, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(std::isfinite(n.log_or));
  const std::vector<double> f{1, 1, 0, 0, 0};
  EXPECT_THROW(weighted_or(y, g, w, 1e6, Normalization::kWeightSum, &f), DegenerateGroupError);
  EXPECT_THROW(weighted_or(y, g, {1, 1, 1, -1, 1}, 1e6), InputError);
}

TEST(Anchors, ReinfarctionChain) {
  const AnchorChain c = compute_anchor_chain();
  EXPECT_NEAR(c.at("crude_true"), 0.509421, 5e-6);
  EXPECT_NEAR(c.at("ipw_true"), 0.573293, 5e-6);
  EXPECT_NEAR(c.at("crude_misclassified"), 1.03117, 5e-5);
  EXPECT_NEAR(c.at("ps_misclassified"), 1.12049, 5e-5);
  EXPECT_NEAR(c.at("gp_misclassified"), 0.933973, 5e-6);
  EXPECT_NEAR(c.at("ipwm_validation"), 0.574021, 5e-6);
  EXPECT_THROW(c.at("nope"), InputError);
}

TEST(Anchors, IpwOnTruthIsTheStandardisedOddsRatio) {
  const double oracle = oracle_standardized_or(reinfarction::true_counts());
  const AnchorChain c = compute_anchor_chain(1e12);
  EXPECT_NEAR(std::log(c.at("ipw_true")), oracle, 1e-8);
}

TEST(Ipwm, ExactExpectedValidationRecoversTheTruth) {
  const Dataset ds = dataset_from_counts(reinfarction::expected_validation());
  const ORResult r = estimate(Method::kIPWM, ds, saturated_specs("L"), 1e12);
  EXPECT_NEAR(r.log_or, oracle_standardized_or(reinfarction::true_counts()), 1e-6);
}

TEST(Ipwm, SurrogateRelabellingLeavesSaturatedEstimateUnchanged) {
  const ValidationCounts p = reinfarction::printed_validation_counts();
  const ModelSpecs specs = saturated_specs("L");
  const double a = estimate(Method::kIPWM, dataset_from_counts(p), specs).log_or;
  const double b = estimate(Method::kIPWM, dataset_from_counts(p.swap_surrogates()), specs).log_or;
  EXPECT_NEAR(a, b, 1e-6);
}

TEST(Specs, ReadFromText) {
  std::istringstream in(
      "# custom models\n"
      "ps = B ~ L1\n"
      "\n"
      "ipwm.y = Y ~ A*Z + B + .\n");
  const ModelSpecs base = main_effects_specs({"L1", "L2"});
  const ModelSpecs m = read_model_specs(in, {"L1", "L2"}, base);
  EXPECT_EQ(m.ps, parse_formula("B ~ L1"));
  EXPECT_EQ(m.ipwm.y, parse_formula("Y ~ A + Z + A:Z + B + L1 + L2"));
  EXPECT_EQ(m.gp.y, base.gp.y);

  std::istringstream bad_role("ipwm.w = Y ~ A\n");
  EXPECT_THROW(read_model_specs(bad_role, {}, base), FormulaError);
  std::istringstream no_eq("Y ~ A\n");
  EXPECT_THROW(read_model_specs(no_eq, {}, base), FormulaError);
  std::istringstream bad_model("ipwm.z = Z ~ A\n");
  EXPECT_THROW(read_model_specs(bad_model, {}, base), FormulaError);
}

TEST(Estimate, FailuresAreReportedPerMethod) {
  Rng rng = make_rng(8, {});
  Dataset ds({"L"});
  for (int i = 0; i < 400; ++i) {
    const int l = uniform01(rng) < 0.5, b = uniform01(rng) < 0.4, z = uniform01(rng) < 0.3;
    ds.push_back({z, b, 0, 0, std::nullopt, std::nullopt, {double(l)}});
  }
  EstimationContext ctx(ds);
  const auto out = estimate_many(parse_methods("all"), ctx, saturated_specs("L"));
  ASSERT_EQ(out.size(), 5u);
  EXPECT_TRUE(out[0].result.has_value());
  EXPECT_TRUE(out[1].result.has_value());
  EXPECT_FALSE(out[2].result.has_value());
  EXPECT_FALSE(out[2].error.empty());
  EXPECT_FALSE(out[4].result.has_value());
}

TEST(Estimate, WarmContextGivesTheSameEstimates) {
  const ScenarioConfig cfg = scenario(7);
  Rng rng = make_rng(3, {});
  const SimDataset sim = generate_dataset(cfg, rng);
  const ModelSpecs specs = main_effects_specs(sim_covariate_names());
  EstimationContext cold(sim.data);
  EstimationContext warm(sim.data, &cold);
  for (Method m : kAllMethods) {
    const double a = estimate(m, cold, specs).log_or;
    const double b = estimate(m, warm, specs).log_or;
    EXPECT_NEAR(a, b, 1e-8) << to_string(m);
  }
}

TEST(Estimate, PropensityWeightingRemovesMeasuredConfounding) {
  // B = A, Z = Y, no unmeasured confounding: PS estimates the marginal OR.
  Rng rng = make_rng(12, {});
  Dataset ds({"L"});
  double r[2] = {0, 0};
  const double pl = 0.4;
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 2; ++a) r[a] += (l ? pl : 1 - pl) * expit(-1.0 + 0.5 * a + 1.5 * l);
  const double truth = logit(r[1]) - logit(r[0]);
  for (int i = 0; i < 200000; ++i) {
    const int l = uniform01(rng) < pl;
    const int a = uniform01(rng) < expit(-0.5 + 1.2 * l);
    const int y = uniform01(rng) < expit(-1.0 + 0.5 * a + 1.5 * l);
    ds.push_back({y, a, 1, 1, y, a, {double(l)}});
  }
  const ModelSpecs specs = saturated_specs("L");
  EXPECT_NEAR(estimate(Method::kPS, ds, specs).log_or, truth, 0.03);
  EXPECT_NEAR(estimate(Method::kIPWM, ds, specs).log_or, truth, 0.03);
  EXPECT_NEAR(estimate(Method::kCCA, ds, specs).log_or, truth, 0.03);
  EXPECT_GT(estimate(Method::kCrude, ds, specs).log_or - truth, 0.1);
}
