#include <gtest/gtest.h>

#include <sstream>

#include "ipwm/reinfarction.hpp"
#include "ipwm/rng.hpp"
#include "ipwm/weights.hpp"

using namespace ipwm;

namespace {

double interior(Rng& rng) { return 0.05 + 0.9 * uniform01(rng); }

SensSpecStratum random_sensspec(Rng& rng) {
  SensSpecStratum s;
  s.delta = interior(rng);
  for (int a = 0; a < 2; ++a) {
    s.epsilon[a] = interior(rng);
    for (int y = 0; y < 2; ++y) {
      s.lambda[y][a] = interior(rng);
      for (int b = 0; b < 2; ++b) s.pi[b][y][a] = interior(rng);
    }
  }
  return s;
}

}  // namespace

TEST(Weights, ConfoundingOnlyByHand) {
  const WeightVector w = weights_confounding_only({1, 0, 1}, {0.25, 0.25, 0.8}, Prevalence{0.4});
  EXPECT_DOUBLE_EQ(w[0], 0.4 / 0.25);
  EXPECT_DOUBLE_EQ(w[1], 0.6 / 0.75);
  EXPECT_DOUBLE_EQ(w[2], 0.4 / 0.8);
  EXPECT_FALSE(w.boundary_warning);
  EXPECT_TRUE(weights_confounding_only({1}, {1.0}, Prevalence{0.4}).boundary_warning);
  EXPECT_THROW(weights_confounding_only({1, 0}, {0.5}, Prevalence{}), InputError);
}

TEST(Weights, SensSpecAndPredictiveFormsAgree) {
  Rng rng = make_rng(99, {});
  for (int rep = 0; rep < 500; ++rep) {
    const SensSpecStratum s = random_sensspec(rng);
    const PredictiveStratum p = convert_params(s);
    const double pb = interior(rng);
    for (int b = 0; b < 2; ++b) {
      const double a = sensspec_weight(s, b, pb), c = predictive_weight(p, b, pb);
      EXPECT_NEAR(a, c, 1e-12 * std::max(1.0, a));
    }
  }
}

TEST(Weights, WeightIsStandardisedRiskOverJointSurrogateMass) {
  // W Pr(Z=1, B=b | L) = p(b) Pr(Y=1 | A=b, L)
  Rng rng = make_rng(5, {});
  const SensSpecStratum s = random_sensspec(rng);
  const Joint16 j = joint_from(s);
  for (int b = 0; b < 2; ++b) {
    double zb = 0.0;
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) zb += j[joint_index(1, b, y, a)];
    EXPECT_NEAR(sensspec_weight(s, b, 0.3) * zb, 0.3 * s.epsilon[b], 1e-14);
  }
}

TEST(Weights, OutcomeOnlyIsJointWeightUnderIdentityChannel) {
  Rng rng = make_rng(6, {});
  for (int rep = 0; rep < 100; ++rep) {
    SensSpecStratum s = random_sensspec(rng);
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) s.lambda[y][a] = a;
    for (int b = 0; b < 2; ++b)
      EXPECT_NEAR(outcome_only_weight(s, b, 0.45), sensspec_weight(s, b, 0.45), 1e-12);
  }
}

TEST(Weights, DegenerateCellsThrow) {
  SensSpecStratum s;
  s.epsilon[1] = 0.0;
  EXPECT_THROW(outcome_only_weight(s, 1, 0.5), DegenerateCellError);
  PredictiveStratum p;
  p.delta_star = 0.0;
  EXPECT_THROW(predictive_weight(p, 1, 0.5), DegenerateCellError);
  SensSpecStratum z;  // pi defaults to zero: Pr(Z=1, B | L) = 0
  EXPECT_THROW(sensspec_weight(z, 0, 0.5), DegenerateCellError);
}

TEST(Weights, StratifiedOverloadsNeedBinaryCovariate) {
  const Dataset ds = dataset_from_counts(reinfarction::expected_validation());
  const MleResult mle = closed_form_mle(reinfarction::expected_validation());
  const WeightVector a = weights_joint_predictive(ds, mle.params, prevalence_of_b(ds));
  const WeightVector b = weights_joint_sensspec(ds, convert_params(mle.params), prevalence_of_b(ds));
  ASSERT_EQ(a.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
  EXPECT_EQ(a.provenance, WeightFormula::kJointPredictive);

  Dataset cont({"age"});
  cont.push_back({1, 1, 0, 0, std::nullopt, std::nullopt, {0.5}});
  EXPECT_THROW(weights_joint_predictive(cont, mle.params, Prevalence{}), UnsupportedDimensionError);
}

TEST(Weights, PrevalenceUsesFrequencies) {
  Dataset ds({"L"});
  ds.push_back({0, 1, 1, 1, 0, 1, {0.0}}, 3.0);
  ds.push_back({0, 0, 0, 0, std::nullopt, std::nullopt, {0.0}}, 1.0);
  EXPECT_DOUBLE_EQ(prevalence_of_b(ds).p1, 0.75);
  EXPECT_DOUBLE_EQ(prevalence_of_a(ds).p1, 1.0);
  EXPECT_DOUBLE_EQ(prevalence_of_b(ds)(0), 0.25);
}

TEST(Weights, CsvDump) {
  Dataset ds({"L"});
  ds.push_back({1, 0, 0, 0, std::nullopt, std::nullopt, {1.0}});
  ds.push_back({0, 1, 0, 0, std::nullopt, std::nullopt, {1.0}});
  WeightVector w;
  w.w = {0.5, 2.0};
  std::ostringstream out;
  write_weights_csv(out, ds, w);
  std::istringstream in(out.str());
  std::string header, r0, r1;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  EXPECT_EQ(header, "index,B,Z,L_hash,W");
  EXPECT_EQ(r0.substr(0, 6), "0,0,1,");
  EXPECT_EQ(r0.substr(r0.size() - 4), ",0.5");
  EXPECT_EQ(r0.substr(6, 16), r1.substr(6, 16));
  EXPECT_EQ(r0.size(), 6u + 16u + 4u);
}
