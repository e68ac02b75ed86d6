#pragma once

// Odds-ratio estimators on weighted data and the five analysis methods:
//
//   Crude  unit weights, surrogate outcome Z against surrogate exposure B
//   PS     confounding-only weights from a model of B on covariates
//   CCA    confounding-only weights from a model of A on covariates, fitted
//          and applied within the records with both Y and A validated
//   GP     outcome-misclassification weights taking B as the true exposure
//   IPWM   joint exposure/outcome misclassification weights
//
// Proportions are passed through P* = (P s + 1)/(s + 2) before the log odds
// ratio is taken, so the estimate is always defined; the transform moves the
// odds ratio towards 1 without changing its direction.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/formula.hpp"
#include "ipwm/glm.hpp"
#include "ipwm/nuisance.hpp"
#include "ipwm/weights.hpp"

namespace ipwm {

inline constexpr double kDefaultShrinkage = 1e6;

inline double shrink(double p, double s) {
  if (!(s > 0.0)) throw InputError("shrinkage constant must be positive");
  return (p * s + 1.0) / (s + 2.0);
}

enum class Method { kCrude, kPS, kCCA, kGP, kIPWM };

inline constexpr Method kAllMethods[] = {Method::kCrude, Method::kPS, Method::kCCA, Method::kGP,
                                         Method::kIPWM};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kCrude: return "Crude";
    case Method::kPS: return "PS";
    case Method::kCCA: return "CCA";
    case Method::kGP: return "GP";
    case Method::kIPWM: return "IPWM";
  }
  return "?";
}

inline Method parse_method(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "CRUDE") return Method::kCrude;
  if (s == "PS") return Method::kPS;
  if (s == "CCA") return Method::kCCA;
  if (s == "GP") return Method::kGP;
  if (s == "IPWM") return Method::kIPWM;
  throw ConfigError("unknown method '" + s + "' (expected Crude, PS, CCA, GP or IPWM)");
}

/// Comma-separated list; "all" selects every method.
inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const auto& tok : detail::split(list, ',')) {
    if (tok.empty()) continue;
    std::string lower = tok;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "all") {
      out.assign(std::begin(kAllMethods), std::end(kAllMethods));
      continue;
    }
    const Method m = parse_method(tok);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ConfigError("no methods selected");
  return out;
}

struct ORResult {
  Method method = Method::kCrude;
  double log_or = 0.0;
  double p0 = 0.0, p1 = 0.0;
  double p0_star = 0.0, p1_star = 0.0;
  double s = kDefaultShrinkage;

  double odds_ratio() const { return std::exp(log_or); }
};

/// How the weighted outcome proportion of a group is normalised.
enum class Normalization {
  kWeightSum,  // sum w y / sum w             (Hajek)
  kGroupSize,  // sum w y / group size        (sample mean of W Z)
};

/// Weighted odds ratio of `outcome` between group 1 and group 0. `freq`
/// optionally gives a multiplicity per row.
inline ORResult weighted_or(const std::vector<int>& outcome, const std::vector<int>& group,
                            const std::vector<double>& w, double s,
                            Normalization norm = Normalization::kWeightSum,
                            const std::vector<double>* freq = nullptr) {
  const std::size_t n = outcome.size();
  if (group.size() != n || w.size() != n || (freq && freq->size() != n))
    throw InputError("weighted_or: length mismatch");
  double num[2] = {0, 0}, wsum[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const int g = group[i];
    const double f = freq ? (*freq)[i] : 1.0;
    if (f == 0.0) continue;
    if (!std::isfinite(w[i]) || w[i] < 0.0) throw InputError("weights must be finite and >= 0");
    num[g] += f * w[i] * outcome[i];
    wsum[g] += f * w[i];
    cnt[g] += f;
  }
  ORResult r;
  r.s = s;
  double p[2];
  for (int g = 0; g < 2; ++g) {
    const double den = norm == Normalization::kWeightSum ? wsum[g] : cnt[g];
    if (!(den > 0.0))
      throw DegenerateGroupError("exposure group " + std::to_string(g) + " carries no weight");
    p[g] = std::clamp(num[g] / den, 0.0, 1.0);
  }
  r.p0 = p[0];
  r.p1 = p[1];
  r.p0_star = shrink(p[0], s);
  r.p1_star = shrink(p[1], s);
  r.log_or = logit(r.p1_star) - logit(r.p0_star);
  return r;
}

/// Z against B with the dataset's frequencies.
inline ORResult weighted_or(const Dataset& ds, const WeightVector& w, double s, Normalization norm) {
  std::vector<int> z(ds.size()), b(ds.size());
  std::vector<double> f(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    z[i] = ds.z(i);
    b[i] = ds.b(i);
    f[i] = ds.freq(i);
  }
  return weighted_or(z, b, w.w, s, norm, &f);
}

/// Model formulas for every method.
struct ModelSpecs {
  DesignSpec ps;     // B ~ covariates
  DesignSpec cca;    // A ~ covariates (validated records)
  NuisanceSpecs ipwm;
  OutcomeOnlySpecs gp;
};

/// Main-effects models in the listed covariates.
inline ModelSpecs main_effects_specs(const std::vector<std::string>& covariates) {
  auto with = [&](std::vector<std::string> roles) {
    roles.insert(roles.end(), covariates.begin(), covariates.end());
    return roles;
  };
  ModelSpecs m;
  m.ps = main_effects("B", covariates);
  m.cca = main_effects("A", covariates);
  m.ipwm.y = main_effects("Y", with({"A", "Z", "B"}));
  m.ipwm.a = main_effects("A", with({"Z", "B"}));
  m.ipwm.z = main_effects("Z", with({"B"}));
  m.ipwm.b = main_effects("B", covariates);
  m.gp.y = main_effects("Y", with({"Z", "B"}));
  m.gp.b = main_effects("B", with({"Z"}));
  m.gp.z = main_effects("Z", covariates);
  return m;
}

/// Fully saturated models for a single binary covariate.
inline ModelSpecs saturated_specs(const std::string& covariate = "L") {
  const std::string& L = covariate;
  ModelSpecs m;
  m.ps = parse_formula("B ~ " + L);
  m.cca = parse_formula("A ~ " + L);
  m.ipwm.y = parse_formula("Y ~ A*Z*B*" + L);
  m.ipwm.a = parse_formula("A ~ Z*B*" + L);
  m.ipwm.z = parse_formula("Z ~ B*" + L);
  m.ipwm.b = parse_formula("B ~ " + L);
  m.gp.y = parse_formula("Y ~ Z*B*" + L);
  m.gp.b = parse_formula("B ~ Z*" + L);
  m.gp.z = parse_formula("Z ~ " + L);
  return m;
}

inline void validate(const ModelSpecs& m) {
  detail::check_spec(m.ps, "B", {}, "propensity");
  detail::check_spec(m.cca, "A", {}, "propensity");
  validate(m.ipwm);
  validate(m.gp);
}

/// Reads `role = formula` lines over `base`. Roles: ps, cca, ipwm.y, ipwm.a,
/// ipwm.z, ipwm.b, gp.y, gp.b, gp.z. Blank lines and '#' comments are skipped.
inline ModelSpecs read_model_specs(std::istream& in, const std::vector<std::string>& covariates,
                                   ModelSpecs base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormulaError("line " + std::to_string(lineno) + ": expected 'role = formula'");
    const std::string role = detail::trim(std::string_view(line).substr(0, eq));
    const DesignSpec f = parse_formula(std::string_view(line).substr(eq + 1), covariates);
    DesignSpec* slot = nullptr;
    if (role == "ps") slot = &base.ps;
    else if (role == "cca") slot = &base.cca;
    else if (role == "ipwm.y") slot = &base.ipwm.y;
    else if (role == "ipwm.a") slot = &base.ipwm.a;
    else if (role == "ipwm.z") slot = &base.ipwm.z;
    else if (role == "ipwm.b") slot = &base.ipwm.b;
    else if (role == "gp.y") slot = &base.gp.y;
    else if (role == "gp.b") slot = &base.gp.b;
    else if (role == "gp.z") slot = &base.gp.z;
    else throw FormulaError("line " + std::to_string(lineno) + ": unknown role '" + role + "'");
    *slot = f;
  }
  validate(base);
  return base;
}

/// Everything fitted on one dataset, shared between methods. A context built
/// on a bootstrap resample can take the original context as a source of
/// starting values.
class EstimationContext {
 public:
  explicit EstimationContext(const Dataset& ds, const EstimationContext* warm = nullptr)
      : ds_(ds), warm_(warm), fits_(ds, warm ? &warm->fits_ : nullptr) {}

  EstimationContext(const EstimationContext&) = delete;
  EstimationContext& operator=(const EstimationContext&) = delete;

  const Dataset& data() const { return ds_; }
  FitCache& fits() { return fits_; }

  /// Records with both Y and A observed.
  const Dataset& validated() {
    if (!validated_) {
      std::vector<double> keep(ds_.size(), 0.0);
      for (std::size_t i = 0; i < ds_.size(); ++i)
        if (ds_.y(i) != kMissing && ds_.a(i) != kMissing) keep[i] = ds_.freq(i);
      validated_.emplace(ds_.with_frequencies(keep));
      if (validated_->empty()) throw InputError("no records with both Y and A validated");
    }
    return *validated_;
  }

  FitCache& validated_fits() {
    if (!validated_fits_) {
      const FitCache* w = nullptr;
      if (warm_ && warm_->validated_fits_) w = &*warm_->validated_fits_;
      validated_fits_.emplace(validated(), w);
    }
    return *validated_fits_;
  }

 private:
  const Dataset& ds_;
  const EstimationContext* warm_;
  FitCache fits_;
  std::optional<Dataset> validated_;
  std::optional<FitCache> validated_fits_;
};

inline ORResult estimate(Method method, EstimationContext& ctx, const ModelSpecs& specs,
                         double s = kDefaultShrinkage) {
  const Dataset& ds = ctx.data();
  ORResult r;
  switch (method) {
    case Method::kCrude: {
      WeightVector w;
      w.w.assign(ds.size(), 1.0);
      r = weighted_or(ds, w, s, Normalization::kWeightSum);
      break;
    }
    case Method::kPS: {
      detail::check_spec(specs.ps, "B", {}, "propensity");
      const LogisticFit& f = ctx.fits().get(specs.ps);
      const LinearPredictor lp(f, specs.ps, ds);
      r = weighted_or(ds, weights_confounding_only(ds, lp, prevalence_of_b(ds)), s,
                      Normalization::kWeightSum);
      break;
    }
    case Method::kCCA: {
      detail::check_spec(specs.cca, "A", {}, "propensity");
      const Dataset& v = ctx.validated();
      const LogisticFit& f = ctx.validated_fits().get(specs.cca);
      const LinearPredictor lp(f, specs.cca, v);
      std::vector<int> y(v.size()), a(v.size());
      std::vector<double> p(v.size()), freq(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        y[i] = v.y(i);
        a[i] = v.a(i);
        p[i] = expit(lp.eta(i));
        freq[i] = v.freq(i);
      }
      const WeightVector w = weights_confounding_only(a, p, prevalence_of_a(v));
      r = weighted_or(y, a, w.w, s, Normalization::kWeightSum, &freq);
      break;
    }
    case Method::kGP: {
      const OutcomeOnlyModels m = fit_outcome_only_models(ds, specs.gp, &ctx.fits());
      const auto strata = outcome_only_strata(m, ds);
      const WeightVector w = weights_outcome_only(
          ds, [&](std::size_t i) -> const SensSpecStratum& { return strata[i]; }, prevalence_of_b(ds));
      r = weighted_or(ds, w, s, Normalization::kGroupSize);
      break;
    }
    case Method::kIPWM: {
      const NuisanceModels m = fit_nuisance_models(ds, specs.ipwm, &ctx.fits());
      const auto strata = predictive_strata(m, ds);
      const WeightVector w = weights_joint_predictive(
          ds, [&](std::size_t i) -> const PredictiveStratum& { return strata[i]; },
          prevalence_of_b(ds));
      r = weighted_or(ds, w, s, Normalization::kGroupSize);
      break;
    }
  }
  r.method = method;
  return r;
}

inline ORResult estimate(Method method, const Dataset& ds, const ModelSpecs& specs,
                         double s = kDefaultShrinkage) {
  EstimationContext ctx(ds);
  return estimate(method, ctx, specs, s);
}

struct MethodOutcome {
  Method method = Method::kCrude;
  std::optional<ORResult> result;
  std::string error;  // set when result is empty
};

/// Runs several methods on one dataset, sharing fitted models. Failures are
/// reported per method instead of aborting the others.
inline std::vector<MethodOutcome> estimate_many(const std::vector<Method>& methods,
                                                EstimationContext& ctx, const ModelSpecs& specs,
                                                double s = kDefaultShrinkage) {
  std::vector<MethodOutcome> out;
  out.reserve(methods.size());
  for (Method m : methods) {
    MethodOutcome o;
    o.method = m;
    try {
      o.result = estimate(m, ctx, specs, s);
      if (!std::isfinite(o.result->log_or)) {
        o.result.reset();
        o.error = "non-finite estimate";
      }
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace ipwm
