#pragma once

// The reinfarction example end to end: odds ratios on the error-free
// counts, on the expected misclassified counts, and IPWM on the printed
// validation-study counts.

#include <string>
#include <vector>

#include "ipwm/data_model.hpp"
#include "ipwm/estimators.hpp"
#include "ipwm/reinfarction.hpp"

namespace ipwm {

struct AnchorValue {
  std::string key;
  std::string label;
  double odds_ratio = 0.0;
};

struct AnchorChain {
  std::vector<AnchorValue> values;

  double at(const std::string& key) const {
    for (const auto& v : values)
      if (v.key == key) return v.odds_ratio;
    throw InputError("no anchor '" + key + "'");
  }
};

inline AnchorChain compute_anchor_chain(double s = kDefaultShrinkage) {
  const ModelSpecs specs = saturated_specs("L");
  const Dataset truth = dataset_from_table(reinfarction::true_counts());
  const Dataset mis = dataset_from_table(reinfarction::expected_misclassified());
  const Dataset val = dataset_from_counts(reinfarction::printed_validation_counts().swap_surrogates());

  AnchorChain c;
  auto add = [&](const char* key, const char* label, Method m, const Dataset& ds) {
    c.values.push_back({key, label, estimate(m, ds, specs, s).odds_ratio()});
  };
  add("crude_true", "crude, no misclassification", Method::kCrude, truth);
  add("ipw_true", "IPW, no misclassification", Method::kPS, truth);
  add("crude_misclassified", "crude, misclassified", Method::kCrude, mis);
  add("ps_misclassified", "PS, misclassified", Method::kPS, mis);
  add("gp_misclassified", "outcome-only correction, misclassified", Method::kGP, mis);
  add("ipwm_validation", "IPWM, validation data", Method::kIPWM, val);
  return c;
}

}  // namespace ipwm
