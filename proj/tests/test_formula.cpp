#include <gtest/gtest.h>

#include "ipwm/formula.hpp"

using namespace ipwm;

namespace {

std::vector<std::string> names(const DesignSpec& s) {
  std::vector<std::string> out;
  for (const auto& t : s.terms) out.push_back(term_name(t));
  return out;
}

}  // namespace

TEST(Formula, MainEffects) {
  const DesignSpec s = parse_formula("Y ~ A + Z + B + L");
  EXPECT_EQ(s.response, "Y");
  EXPECT_TRUE(s.intercept);
  EXPECT_EQ(names(s), (std::vector<std::string>{"A", "Z", "B", "L"}));
}

TEST(Formula, StarExpandsByDegree) {
  const DesignSpec s = parse_formula("Y ~ A*Z*L");
  EXPECT_EQ(names(s), (std::vector<std::string>{"A", "Z", "L", "A:Z", "A:L", "Z:L", "A:Z:L"}));
}

TEST(Formula, ColonAndInterceptControl) {
  EXPECT_EQ(names(parse_formula("B ~ Z + Z:L")), (std::vector<std::string>{"Z", "Z:L"}));
  EXPECT_FALSE(parse_formula("B ~ 0 + L").intercept);
  EXPECT_FALSE(parse_formula("B ~ L - 1").intercept);
  EXPECT_TRUE(parse_formula("B ~ 1").intercept);
  EXPECT_TRUE(parse_formula("B ~ 1").terms.empty());
}

TEST(Formula, DotExpandsCovariates) {
  const DesignSpec s = parse_formula("Z ~ B + .", {"L1", "L2"});
  EXPECT_EQ(names(s), (std::vector<std::string>{"B", "L1", "L2"}));
}

TEST(Formula, RejectsMalformedInput) {
  EXPECT_THROW(parse_formula("Y A + B"), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ A ~ B"), FormulaError);
  EXPECT_THROW(parse_formula("~ A"), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ A + A"), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ A:B + B:A"), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ A:A"), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ A + "), FormulaError);
  EXPECT_THROW(parse_formula("Y ~ 3x"), FormulaError);
}

TEST(Formula, ToStringRoundTrips) {
  for (const char* f : {"Y ~ A + Z + B + L", "A ~ Z*B*L", "B ~ 0 + L", "Z ~ 1"}) {
    const DesignSpec s = parse_formula(f);
    EXPECT_EQ(parse_formula(s.to_string()), s) << f;
  }
}

TEST(Formula, MainEffectsHelper) {
  const DesignSpec s = main_effects("B", {"L1", "L2"});
  EXPECT_EQ(s, parse_formula("B ~ L1 + L2"));
}
