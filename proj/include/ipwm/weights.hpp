#pragma once

// Per-record inverse probability weights.
//
//   confounding only       W = p(A) / Pr(A | L)
//   joint (sens/spec)      W = p(B) Pr(Y=1 | A=B, L) / Pr(Z=1, B | L)
//   joint (pred. values)   the same quantity written in predictive values:
//                          Pr(Y=1 | A=B, L) = sum_{z,b} pi*_{B z b} Pr(A=B|z,b) Pr(z,b)
//                                             / sum_{z,b} Pr(A=B|z,b) Pr(z,b)
//                          Pr(Z=1, B | L)   = epsilon*_B Pr(B | L)
//   outcome only           exposure taken as correctly classified (A = B)
//
// p(.) is the marginal prevalence of the record's level. Weights are
// produced for every record; for Z = 0 records they do not enter the
// estimator but are still well defined.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/glm.hpp"
#include "ipwm/nuisance.hpp"

namespace ipwm {

enum class WeightFormula { kConfoundingOnly, kJointSensSpec, kJointPredictive, kOutcomeOnly };

inline const char* to_string(WeightFormula f) {
  switch (f) {
    case WeightFormula::kConfoundingOnly: return "confounding-only";
    case WeightFormula::kJointSensSpec: return "joint-sensspec";
    case WeightFormula::kJointPredictive: return "joint-predictive";
    case WeightFormula::kOutcomeOnly: return "outcome-only";
  }
  return "?";
}

struct WeightVector {
  std::vector<double> w;
  WeightFormula provenance = WeightFormula::kConfoundingOnly;
  bool boundary_warning = false;  // a probability in a denominator hit the clamp

  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }
};

/// Marginal prevalence of a binary level.
struct Prevalence {
  double p1 = 0.5;
  double operator()(int level) const { return level ? p1 : 1.0 - p1; }
};

inline Prevalence prevalence_of_b(const Dataset& ds) {
  double n = 0.0, k = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    n += ds.freq(i);
    k += ds.freq(i) * ds.b(i);
  }
  if (!(n > 0.0)) throw InputError("prevalence of an empty dataset");
  return {k / n};
}

/// Prevalence of A among records with A observed.
inline Prevalence prevalence_of_a(const Dataset& ds) {
  double n = 0.0, k = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.a(i) == kMissing) continue;
    n += ds.freq(i);
    k += ds.freq(i) * ds.a(i);
  }
  if (!(n > 0.0)) throw InputError("no records with A observed");
  return {k / n};
}

namespace detail {

inline bool at_clamp(double p) { return p <= kProbFloor || p >= 1.0 - kProbFloor; }

}  // namespace detail

/// W_i = p(x_i) / Pr(X = x_i | L_i) for exposure levels x_i and fitted
/// Pr(X = 1 | L_i) given per record.
inline WeightVector weights_confounding_only(const std::vector<int>& exposure,
                                             const std::vector<double>& propensity,
                                             const Prevalence& prevalence) {
  if (exposure.size() != propensity.size())
    throw InputError("exposure and propensity lengths differ");
  WeightVector out;
  out.provenance = WeightFormula::kConfoundingOnly;
  out.w.resize(exposure.size());
  for (std::size_t i = 0; i < exposure.size(); ++i) {
    const double p = clamp_prob(propensity[i]);
    out.boundary_warning = out.boundary_warning || detail::at_clamp(propensity[i]);
    out.w[i] = prevalence(exposure[i]) / bern(p, exposure[i]);
  }
  return out;
}

/// Confounding-only weights on B with a fitted model of B on covariates.
inline WeightVector weights_confounding_only(const Dataset& ds, const LinearPredictor& propensity,
                                             const Prevalence& prevalence) {
  std::vector<int> x(ds.size());
  std::vector<double> p(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    x[i] = ds.b(i);
    p[i] = expit(propensity.eta(i));
  }
  return weights_confounding_only(x, p, prevalence);
}

/// Pr(Z=1, B=b | L) and Pr(Y=1 | A=b, L) from sensitivity/specificity parameters.
inline double sensspec_weight(const SensSpecStratum& s, int b, double p_b) {
  double den = 0.0;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      den += s.pi[b][y][a] * bern(s.lambda[y][a], b) * bern(s.epsilon[a], y) * bern(s.delta, a);
  if (!(den > 0.0) || !std::isfinite(den))
    throw DegenerateCellError("Pr(Z=1, B=" + std::to_string(b) + " | L) is zero");
  return p_b * s.epsilon[b] / den;
}

inline double predictive_weight(const PredictiveStratum& s, int b, double p_b) {
  double num = 0.0, den = 0.0;
  for (int z = 0; z < 2; ++z)
    for (int bb = 0; bb < 2; ++bb) {
      const double pzb = bern(s.epsilon_star[bb], z) * bern(s.delta_star, bb);
      const double pa = bern(s.lambda_star[z][bb], b);
      num += s.pi_star[b][z][bb] * pa * pzb;
      den += pa * pzb;
    }
  const double pz1b = s.epsilon_star[b] * bern(s.delta_star, b);
  if (!(den > 0.0) || !(pz1b > 0.0) || !std::isfinite(num))
    throw DegenerateCellError("degenerate predictive-value cell for B=" + std::to_string(b));
  return num / den * p_b / pz1b;
}

/// Exposure read as B, i.e. lambda is the identity channel.
inline double outcome_only_weight(const SensSpecStratum& s, int b, double p_b) {
  const double e = s.epsilon[b];
  if (!(e > 0.0)) throw DegenerateCellError("Pr(Y=1 | A=" + std::to_string(b) + ", L) is zero");
  const double inv = bern(s.delta, b) / p_b * (s.pi[b][0][b] * (1.0 - e) / e + s.pi[b][1][b]);
  if (!(inv > 0.0) || !std::isfinite(inv))
    throw DegenerateCellError("degenerate outcome-only cell for A=" + std::to_string(b));
  return 1.0 / inv;
}

namespace detail {

template <class StratumOf, class F>
WeightVector apply_weights(const Dataset& ds, StratumOf&& stratum_of, const Prevalence& prev,
                           WeightFormula formula, F&& f) {
  WeightVector out;
  out.provenance = formula;
  out.w.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int b = ds.b(i);
    out.w[i] = f(stratum_of(i), b, prev(b));
  }
  return out;
}

inline std::size_t binary_level(const Dataset& ds, std::size_t i) {
  if (ds.num_covariates() != 1)
    throw UnsupportedDimensionError("stratified parameters need a single binary covariate");
  const double v = ds.cov(i, 0);
  if (v != 0.0 && v != 1.0) throw UnsupportedDimensionError("covariate is not binary");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// `stratum_of(i)` returns the parameters at record i's covariates.
template <class StratumOf>
  requires std::invocable<StratumOf&, std::size_t>
WeightVector weights_joint_sensspec(const Dataset& ds, StratumOf&& stratum_of, const Prevalence& prev) {
  return detail::apply_weights(ds, stratum_of, prev, WeightFormula::kJointSensSpec, sensspec_weight);
}

template <class StratumOf>
  requires std::invocable<StratumOf&, std::size_t>
WeightVector weights_joint_predictive(const Dataset& ds, StratumOf&& stratum_of, const Prevalence& prev) {
  return detail::apply_weights(ds, stratum_of, prev, WeightFormula::kJointPredictive,
                               predictive_weight);
}

template <class StratumOf>
  requires std::invocable<StratumOf&, std::size_t>
WeightVector weights_outcome_only(const Dataset& ds, StratumOf&& stratum_of, const Prevalence& prev) {
  return detail::apply_weights(ds, stratum_of, prev, WeightFormula::kOutcomeOnly, outcome_only_weight);
}

// Binary-covariate overloads.
inline WeightVector weights_joint_sensspec(const Dataset& ds, const SensSpecParams& p,
                                           const Prevalence& prev) {
  return weights_joint_sensspec(
      ds, [&](std::size_t i) -> const SensSpecStratum& { return p.l[detail::binary_level(ds, i)]; },
      prev);
}

inline WeightVector weights_joint_predictive(const Dataset& ds, const PredictiveValueParams& p,
                                             const Prevalence& prev) {
  return weights_joint_predictive(
      ds,
      [&](std::size_t i) -> const PredictiveStratum& { return p.l[detail::binary_level(ds, i)]; },
      prev);
}

inline WeightVector weights_outcome_only(const Dataset& ds, const SensSpecParams& p,
                                         const Prevalence& prev) {
  return weights_outcome_only(
      ds, [&](std::size_t i) -> const SensSpecStratum& { return p.l[detail::binary_level(ds, i)]; },
      prev);
}

/// 64-bit FNV-1a over the covariate bytes of a record.
inline std::uint64_t covariate_hash(const Dataset& ds, std::size_t i) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = reinterpret_cast<const unsigned char*>(ds.cov_row(i));
  for (std::size_t k = 0; k < ds.num_covariates() * sizeof(double); ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Diagnostic dump: index,B,Z,L_hash,W
inline void write_weights_csv(std::ostream& out, const Dataset& ds, const WeightVector& w) {
  out << "index,B,Z,L_hash,W\n";
  char hex[17];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(covariate_hash(ds, i)));
    out << i << ',' << ds.b(i) << ',' << ds.z(i) << ',' << hex << ',' << format_double(w[i]) << '\n';
  }
}

}  // namespace ipwm
