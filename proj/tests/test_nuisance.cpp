#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ipwm/nuisance.hpp"
#include "ipwm/reinfarction.hpp"
#include "ipwm/rng.hpp"

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

double max_diff(const SensSpecStratum& a, const SensSpecStratum& b) {
  double d = std::abs(a.delta - b.delta);
  for (int x = 0; x < 2; ++x) {
    d = std::max(d, std::abs(a.epsilon[x] - b.epsilon[x]));
    for (int y = 0; y < 2; ++y) {
      d = std::max(d, std::abs(a.lambda[y][x] - b.lambda[y][x]));
      for (int z = 0; z < 2; ++z) d = std::max(d, std::abs(a.pi[z][y][x] - b.pi[z][y][x]));
    }
  }
  return d;
}

const ValidationCounts& table5() {
  static const ValidationCounts m = reinfarction::printed_validation_counts().swap_surrogates();
  return m;
}

}  // namespace

TEST(Conversion, RoundTripThroughPredictiveValues) {
  Rng rng = make_rng(17, {});
  for (int rep = 0; rep < 200; ++rep) {
    const SensSpecStratum s = random_sensspec(rng);
    const PredictiveStratum p = convert_params(s);
    EXPECT_LE(max_diff(s, convert_params(p)), 1e-12);
    const Joint16 a = joint_from(s), b = joint_from(p);
    for (int k = 0; k < 16; ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
  }
}

TEST(Conversion, EmptyConditioningCellIsNamed) {
  SensSpecStratum s;
  s.delta = 0.0;
  try {
    convert_params(s, 1);
    FAIL() << "expected ConversionError";
  } catch (const ConversionError& e) {
    EXPECT_NE(std::string(e.what()).find("l=1"), std::string::npos);
  }
}

TEST(Mle, MatchesSaturatedRegressions) {
  const MleResult mle = closed_form_mle(table5());
  ASSERT_TRUE(mle.estimable());
  const Dataset ds = dataset_from_counts(table5());
  NuisanceSpecs specs{parse_formula("Y ~ A*Z*B*L"), parse_formula("A ~ Z*B*L"), parse_formula("Z ~ B*L"),
                      parse_formula("B ~ L")};
  const PredictiveValueParams fitted = tabulate_predictive(fit_nuisance_models(ds, specs));
  const auto a = to_key_values(mle.params), b = to_key_values(fitted);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k].second, b[k].second, 1e-6) << a[k].first;
}

TEST(Mle, KnownPredictiveValues) {
  const MleResult mle = closed_form_mle(table5());
  EXPECT_NEAR(mle.params.l[0].lambda_star[0][1], 0.98934, 5e-6);
  EXPECT_NEAR(mle.params.l[0].pi_star[0][0][0], 0.0047428, 5e-8);
}

TEST(Mle, MaximisesTheLikelihood) {
  const MleResult mle = closed_form_mle(table5());
  const double best = loglik_predictive(mle.params, table5());
  Rng rng = make_rng(4, {});
  for (int rep = 0; rep < 50; ++rep) {
    PredictiveValueParams p = mle.params;
    auto& s = p.l[rep % 2];
    const double h = (rep % 3 == 1 ? -1e-3 : 1e-3) * (1.0 + uniform01(rng));
    switch (rep % 4) {
      case 0: s.delta_star += h; break;
      case 1: s.epsilon_star[rep % 3 == 0] += h; break;
      case 2: s.lambda_star[1][0] += h; break;
      default: s.pi_star[1][0][1] += h; break;
    }
    EXPECT_LT(loglik_predictive(p, table5()), best);
  }
}

TEST(Mle, EmptyCellsAreReportedNotGuessed) {
  ValidationCounts m = table5();
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) m(ValidationCounts::validated_index(1, 1, y, a, 1)) = 0.0;
  const MleResult mle = closed_form_mle(m);
  EXPECT_FALSE(mle.estimable());
  EXPECT_TRUE(std::isnan(mle.params.l[1].lambda_star[1][1]));
  bool named = false;
  for (const auto& p : mle.inestimable) named = named || p.name == "lambda*[z=1,b=1,l=1]";
  EXPECT_TRUE(named);
}

TEST(Params, TextRoundTrip) {
  const MleResult mle = closed_form_mle(table5());
  std::stringstream io;
  write_params(io, mle.params);
  const auto back = read_params<PredictiveValueParams>(io);
  const auto a = to_key_values(mle.params), b = to_key_values(back);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].second, b[k].second);

  std::stringstream io2;
  write_params(io2, convert_params(mle.params));
  EXPECT_NO_THROW(read_params<SensSpecParams>(io2));

  std::istringstream missing("delta*[l=0] = 0.5\n");
  EXPECT_THROW(read_params<PredictiveValueParams>(missing), InputError);
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_THROW(read_params<PredictiveValueParams>(unknown), InputError);
}

TEST(Specs, RolesAreRestricted) {
  NuisanceSpecs ok{parse_formula("Y ~ A + Z + B + L"), parse_formula("A ~ Z + B + L"),
                   parse_formula("Z ~ B + L"), parse_formula("B ~ L")};
  EXPECT_NO_THROW(validate(ok));
  NuisanceSpecs bad = ok;
  bad.z = parse_formula("Z ~ A + L");
  EXPECT_THROW(validate(bad), FormulaError);
  bad = ok;
  bad.b = parse_formula("Y ~ L");
  EXPECT_THROW(validate(bad), FormulaError);
  OutcomeOnlySpecs gp{parse_formula("Y ~ Z + B + L"), parse_formula("B ~ Z + L"), parse_formula("Z ~ L")};
  EXPECT_NO_THROW(validate(gp));
  gp.y = parse_formula("Y ~ A + L");
  EXPECT_THROW(validate(gp), FormulaError);
}

TEST(FitCache, FitsEachFormulaOnce) {
  const Dataset ds = dataset_from_counts(table5());
  FitCache cache(ds);
  const LogisticFit& a = cache.get(parse_formula("B ~ L"));
  const LogisticFit& b = cache.get(parse_formula("B~L"));
  EXPECT_EQ(&a, &b);
  FitCache warm(ds, &cache);
  const LogisticFit& c = warm.get(parse_formula("B ~ L"));
  EXPECT_LE((a.coefficients - c.coefficients).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(c.iterations, a.iterations);
}

TEST(OutcomeOnly, StratumFromKnownJoint) {
  const double pz1 = 0.3, pb1[2] = {0.2, 0.6}, py1[2][2] = {{0.1, 0.4}, {0.7, 0.9}};
  const SensSpecStratum s = outcome_only_stratum(pz1, pb1, py1);
  const double pb = 0.7 * 0.2 + 0.3 * 0.6;
  EXPECT_NEAR(s.delta, pb, 1e-15);
  EXPECT_NEAR(s.epsilon[1], (0.7 * 0.2 * 0.4 + 0.3 * 0.6 * 0.9) / pb, 1e-15);
  EXPECT_NEAR(s.pi[1][1][1], 0.3 * 0.6 * 0.9 / (0.3 * 0.6 * 0.9 + 0.7 * 0.2 * 0.4), 1e-15);
  EXPECT_EQ(s.lambda[0][1], 1.0);
  EXPECT_EQ(s.lambda[1][0], 0.0);
}
