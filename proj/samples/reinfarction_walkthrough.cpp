// From error-free counts to a corrected odds ratio on the reinfarction
// example: misclassify the counts, draw a validation subsample, estimate the
// predictive values by maximum likelihood, and weight.

#include <cmath>
#include <cstdio>
#include <iostream>

#include "ipwm/ipwm.hpp"

int main() {
  using namespace ipwm;

  const CellCountTable truth = reinfarction::true_counts();
  const CellCountTable observed = reinfarction::expected_misclassified();
  const ValidationCounts m = reinfarction::expected_validation();

  std::printf("records: %.0f\n", truth.total());
  std::printf("Pr(Z=1) = %.4f, Pr(Y=1) = %.4f\n",
              observed.collapse(bit(Var::Z)).at(1, 0, 0, 0, 0) / observed.total(),
              truth.collapse(bit(Var::Y)).at(0, 0, 1, 0, 0) / truth.total());

  const MleResult mle = closed_form_mle(m);
  if (!mle.estimable()) {
    std::cerr << "some predictive values are not estimable\n";
    return 1;
  }
  std::cout << "\npredictive values at L = 0 and L = 1\n";
  write_params(std::cout, mle.params);

  const Dataset ds = dataset_from_counts(m);
  const WeightVector w = weights_joint_predictive(ds, mle.params, prevalence_of_b(ds));
  const ORResult r = weighted_or(ds, w, kDefaultShrinkage, Normalization::kGroupSize);
  std::printf("\nE[Y(0)] = %.5f, E[Y(1)] = %.5f, OR = %.3f\n", r.p0, r.p1, r.odds_ratio());

  const double oracle = std::exp(oracle_standardized_or(truth));
  std::printf("standardised OR on the error-free counts = %.3f\n", oracle);
  return 0;
}
