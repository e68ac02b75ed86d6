#pragma once

// Nuisance parameters of the misclassification model in its two
// factorisations of Pr(Z,B,Y,A | L):
//
//   sensitivity/specificity   Pr(A) Pr(Y|A) Pr(B|Y,A) Pr(Z|B,Y,A)
//                             delta, epsilon[a], lambda[y][a], pi[b][y][a]
//   predictive values         Pr(B) Pr(Z|B) Pr(A|Z,B) Pr(Y|A,Z,B)
//                             delta*, epsilon*[b], lambda*[z][b], pi*[a][z][b]
//
// Conversion between them goes through the 16-cell joint table. For a binary
// covariate the predictive-value MLE has a closed form in the 48 observation
// counts; for general covariates the four factors are fitted as separate
// logistic regressions (Y and A on the validation subset).

#include <array>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/glm.hpp"

namespace ipwm {

struct SensSpecStratum {
  double delta = 0.5;
  double epsilon[2] = {0.5, 0.5};           // [a]
  double lambda[2][2] = {{0.5, 0.5}, {0.5, 0.5}};  // [y][a]
  double pi[2][2][2] = {};                  // [b][y][a]
};

struct PredictiveStratum {
  double delta_star = 0.5;
  double epsilon_star[2] = {0.5, 0.5};      // [b]
  double lambda_star[2][2] = {{0.5, 0.5}, {0.5, 0.5}};  // [z][b]
  double pi_star[2][2][2] = {};             // [a][z][b]
};

/// Indexed by the binary covariate l.
struct SensSpecParams {
  std::array<SensSpecStratum, 2> l;
};

struct PredictiveValueParams {
  std::array<PredictiveStratum, 2> l;
};

/// Joint probabilities of (Z,B,Y,A) given L, index z + 2b + 4y + 8a.
using Joint16 = std::array<double, 16>;

inline constexpr int joint_index(int z, int b, int y, int a) { return z + 2 * b + 4 * y + 8 * a; }

inline Joint16 joint_from(const SensSpecStratum& s) {
  Joint16 j{};
  for (int z = 0; z < 2; ++z)
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          j[joint_index(z, b, y, a)] = bern(s.delta, a) * bern(s.epsilon[a], y) *
                                       bern(s.lambda[y][a], b) * bern(s.pi[b][y][a], z);
  return j;
}

inline Joint16 joint_from(const PredictiveStratum& s) {
  Joint16 j{};
  for (int z = 0; z < 2; ++z)
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          j[joint_index(z, b, y, a)] = bern(s.delta_star, b) * bern(s.epsilon_star[b], z) *
                                       bern(s.lambda_star[z][b], a) * bern(s.pi_star[a][z][b], y);
  return j;
}

namespace detail {

template <class Pred>
double joint_mass(const Joint16& j, Pred keep) {
  double s = 0.0;
  for (int z = 0; z < 2; ++z)
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          if (keep(z, b, y, a)) s += j[joint_index(z, b, y, a)];
  return s;
}

/// num/den; `cell` (a callable returning the cell label) is only evaluated
/// when the conditioning mass is zero.
template <class Label>
double conditional(double num, double den, Label&& cell) {
  if (!(den > 0.0)) throw ConversionError("no probability mass in conditioning cell " + cell());
  return num / den;
}

}  // namespace detail

inline SensSpecStratum sensspec_from_joint(const Joint16& j, int l = 0) {
  using detail::conditional;
  using detail::joint_mass;
  const std::string ls = ",l=" + std::to_string(l) + "]";
  SensSpecStratum s;
  const double tot = joint_mass(j, [](int, int, int, int) { return true; });
  s.delta = conditional(joint_mass(j, [](int, int, int, int a) { return a == 1; }), tot, [&] { return "[" + ls.substr(1); });
  for (int a = 0; a < 2; ++a) {
    const double pa = joint_mass(j, [a](int, int, int, int aa) { return aa == a; });
    s.epsilon[a] = conditional(
        joint_mass(j, [a](int, int, int y, int aa) { return aa == a && y == 1; }), pa,
        [&] { return "[a=" + std::to_string(a) + ls; });
    for (int y = 0; y < 2; ++y) {
      const double pya = joint_mass(j, [a, y](int, int, int yy, int aa) { return aa == a && yy == y; });
      s.lambda[y][a] = conditional(
          joint_mass(j, [a, y](int, int b, int yy, int aa) { return aa == a && yy == y && b == 1; }),
          pya, [&] { return "[y=" + std::to_string(y) + ",a=" + std::to_string(a) + ls; });
      for (int b = 0; b < 2; ++b) {
        const double pbya = j[joint_index(0, b, y, a)] + j[joint_index(1, b, y, a)];
        s.pi[b][y][a] = conditional(j[joint_index(1, b, y, a)], pbya, [&] {
          return "[b=" + std::to_string(b) + ",y=" + std::to_string(y) + ",a=" + std::to_string(a) + ls;
        });
      }
    }
  }
  return s;
}

inline PredictiveStratum predictive_from_joint(const Joint16& j, int l = 0) {
  using detail::conditional;
  using detail::joint_mass;
  const std::string ls = ",l=" + std::to_string(l) + "]";
  PredictiveStratum s;
  const double tot = joint_mass(j, [](int, int, int, int) { return true; });
  s.delta_star = conditional(joint_mass(j, [](int, int b, int, int) { return b == 1; }), tot,
                             [&] { return "[" + ls.substr(1); });
  for (int b = 0; b < 2; ++b) {
    const double pb = joint_mass(j, [b](int, int bb, int, int) { return bb == b; });
    s.epsilon_star[b] = conditional(
        joint_mass(j, [b](int z, int bb, int, int) { return bb == b && z == 1; }), pb,
        [&] { return "[b=" + std::to_string(b) + ls; });
    for (int z = 0; z < 2; ++z) {
      const double pzb = joint_mass(j, [b, z](int zz, int bb, int, int) { return bb == b && zz == z; });
      s.lambda_star[z][b] = conditional(
          joint_mass(j, [b, z](int zz, int bb, int, int a) { return bb == b && zz == z && a == 1; }),
          pzb, [&] { return "[z=" + std::to_string(z) + ",b=" + std::to_string(b) + ls; });
      for (int a = 0; a < 2; ++a) {
        const double pazb = j[joint_index(z, b, 0, a)] + j[joint_index(z, b, 1, a)];
        s.pi_star[a][z][b] = conditional(j[joint_index(z, b, 1, a)], pazb, [&] {
          return "[a=" + std::to_string(a) + ",z=" + std::to_string(z) + ",b=" + std::to_string(b) + ls;
        });
      }
    }
  }
  return s;
}

inline PredictiveStratum convert_params(const SensSpecStratum& s, int l = 0) {
  return predictive_from_joint(joint_from(s), l);
}
inline SensSpecStratum convert_params(const PredictiveStratum& s, int l = 0) {
  return sensspec_from_joint(joint_from(s), l);
}
inline PredictiveValueParams convert_params(const SensSpecParams& p) {
  return {{convert_params(p.l[0], 0), convert_params(p.l[1], 1)}};
}
inline SensSpecParams convert_params(const PredictiveValueParams& p) {
  return {{convert_params(p.l[0], 0), convert_params(p.l[1], 1)}};
}

// ===========================================================================
// Closed-form MLE and log-likelihood for a binary covariate
// ===========================================================================

struct InestimableParam {
  std::string name;
  std::vector<int> cells;  // m-indices of the (empty) denominator
};

struct MleResult {
  PredictiveValueParams params;  // NaN where inestimable
  std::vector<InestimableParam> inestimable;

  bool estimable() const { return inestimable.empty(); }
};

inline MleResult closed_form_mle(const ValidationCounts& m) {
  using VC = ValidationCounts;
  MleResult out;
  auto ratio = [&](const std::vector<int>& num, const std::vector<int>& den,
                   const std::string& name) {
    double a = 0.0, d = 0.0;
    for (int j : num) a += m(j);
    for (int j : den) d += m(j);
    if (!(d > 0.0)) {
      out.inestimable.push_back({name, den});
      return std::numeric_limits<double>::quiet_NaN();
    }
    return clamp_prob(a / d);
  };
  for (int l = 0; l < 2; ++l) {
    PredictiveStratum& s = out.params.l[l];
    const std::string ls = "l=" + std::to_string(l) + "]";
    // Slots matching (z?, b?) for both unvalidated and validated types.
    auto slots = [&](int zsel, int bsel) {
      std::vector<int> v;
      for (int z = 0; z < 2; ++z)
        for (int b = 0; b < 2; ++b) {
          if ((zsel >= 0 && z != zsel) || (bsel >= 0 && b != bsel)) continue;
          v.push_back(VC::unvalidated_index(z, b, l));
          for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a) v.push_back(VC::validated_index(z, b, y, a, l));
        }
      return v;
    };
    s.delta_star = ratio(slots(-1, 1), slots(-1, -1), "delta*[" + ls);
    for (int b = 0; b < 2; ++b) {
      s.epsilon_star[b] =
          ratio(slots(1, b), slots(-1, b), "epsilon*[b=" + std::to_string(b) + "," + ls);
      for (int z = 0; z < 2; ++z) {
        std::vector<int> num, den;
        for (int y = 0; y < 2; ++y) {
          num.push_back(VC::validated_index(z, b, y, 1, l));
          for (int a = 0; a < 2; ++a) den.push_back(VC::validated_index(z, b, y, a, l));
        }
        s.lambda_star[z][b] = ratio(num, den, "lambda*[z=" + std::to_string(z) + ",b=" +
                                                  std::to_string(b) + "," + ls);
        for (int a = 0; a < 2; ++a) {
          s.pi_star[a][z][b] =
              ratio({VC::validated_index(z, b, 1, a, l)},
                    {VC::validated_index(z, b, 0, a, l), VC::validated_index(z, b, 1, a, l)},
                    "pi*[a=" + std::to_string(a) + ",z=" + std::to_string(z) + ",b=" +
                        std::to_string(b) + "," + ls);
        }
      }
    }
  }
  return out;
}

/// Sum over observation types of m_j times its log-likelihood contribution.
/// Partially validated types contribute nothing; empty types are skipped.
inline double loglik_predictive(const PredictiveValueParams& p, const ValidationCounts& m) {
  using VC = ValidationCounts;
  auto lg = [](double prob, int x) { return std::log(bern(prob, x)); };
  double ll = 0.0;
  for (int l = 0; l < 2; ++l) {
    const PredictiveStratum& s = p.l[l];
    for (int z = 0; z < 2; ++z)
      for (int b = 0; b < 2; ++b) {
        const double surrogate = lg(s.epsilon_star[b], z) + lg(s.delta_star, b);
        const double mu = m(VC::unvalidated_index(z, b, l));
        if (mu != 0.0) ll += mu * surrogate;
        for (int y = 0; y < 2; ++y)
          for (int a = 0; a < 2; ++a) {
            const double mv = m(VC::validated_index(z, b, y, a, l));
            if (mv == 0.0) continue;
            ll += mv * (lg(s.pi_star[a][z][b], y) + lg(s.lambda_star[z][b], a) + surrogate);
          }
      }
  }
  return ll;
}

// ===========================================================================
// Text serialisation: one "key = value" per line
// ===========================================================================

inline std::vector<std::pair<std::string, double>> to_key_values(const PredictiveValueParams& p) {
  std::vector<std::pair<std::string, double>> kv;
  auto s = [](int v) { return std::to_string(v); };
  for (int l = 0; l < 2; ++l) {
    const auto& t = p.l[l];
    kv.emplace_back("delta*[l=" + s(l) + "]", t.delta_star);
    for (int b = 0; b < 2; ++b) kv.emplace_back("epsilon*[b=" + s(b) + ",l=" + s(l) + "]", t.epsilon_star[b]);
    for (int z = 0; z < 2; ++z)
      for (int b = 0; b < 2; ++b)
        kv.emplace_back("lambda*[z=" + s(z) + ",b=" + s(b) + ",l=" + s(l) + "]", t.lambda_star[z][b]);
    for (int a = 0; a < 2; ++a)
      for (int z = 0; z < 2; ++z)
        for (int b = 0; b < 2; ++b)
          kv.emplace_back("pi*[a=" + s(a) + ",z=" + s(z) + ",b=" + s(b) + ",l=" + s(l) + "]",
                          t.pi_star[a][z][b]);
  }
  return kv;
}

inline std::vector<std::pair<std::string, double>> to_key_values(const SensSpecParams& p) {
  std::vector<std::pair<std::string, double>> kv;
  auto s = [](int v) { return std::to_string(v); };
  for (int l = 0; l < 2; ++l) {
    const auto& t = p.l[l];
    kv.emplace_back("delta[l=" + s(l) + "]", t.delta);
    for (int a = 0; a < 2; ++a) kv.emplace_back("epsilon[a=" + s(a) + ",l=" + s(l) + "]", t.epsilon[a]);
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        kv.emplace_back("lambda[y=" + s(y) + ",a=" + s(a) + ",l=" + s(l) + "]", t.lambda[y][a]);
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a)
          kv.emplace_back("pi[b=" + s(b) + ",y=" + s(y) + ",a=" + s(a) + ",l=" + s(l) + "]",
                          t.pi[b][y][a]);
  }
  return kv;
}

template <class Params>
void write_params(std::ostream& out, const Params& p) {
  for (const auto& [k, v] : to_key_values(p)) out << k << " = " << format_double(v) << '\n';
}

/// Reads what write_params produced. Every key must be present exactly once.
template <class Params>
Params read_params(std::istream& in) {
  Params p;
  auto keys = to_key_values(p);
  std::vector<double> values(keys.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(keys.size(), false);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=', line.find(']') == std::string::npos ? 0 : line.find(']'));
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw InputError("parameter line without '=': " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    std::size_t k = 0;
    while (k < keys.size() && keys[k].first != key) ++k;
    if (k == keys.size()) throw InputError("unknown parameter '" + key + "'");
    if (seen[k]) throw InputError("parameter '" + key + "' given twice");
    seen[k] = true;
    try {
      values[k] = std::stod(val);
    } catch (const std::exception&) {
      throw InputError("bad value for '" + key + "'");
    }
  }
  for (std::size_t k = 0; k < keys.size(); ++k)
    if (!seen[k]) throw InputError("parameter '" + keys[k].first + "' missing");
  // Assign back in the same traversal order as to_key_values.
  std::size_t k = 0;
  if constexpr (std::is_same_v<Params, PredictiveValueParams>) {
    for (int l = 0; l < 2; ++l) {
      auto& t = p.l[l];
      t.delta_star = values[k++];
      for (int b = 0; b < 2; ++b) t.epsilon_star[b] = values[k++];
      for (int z = 0; z < 2; ++z)
        for (int b = 0; b < 2; ++b) t.lambda_star[z][b] = values[k++];
      for (int a = 0; a < 2; ++a)
        for (int z = 0; z < 2; ++z)
          for (int b = 0; b < 2; ++b) t.pi_star[a][z][b] = values[k++];
    }
  } else {
    for (int l = 0; l < 2; ++l) {
      auto& t = p.l[l];
      t.delta = values[k++];
      for (int a = 0; a < 2; ++a) t.epsilon[a] = values[k++];
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a) t.lambda[y][a] = values[k++];
      for (int b = 0; b < 2; ++b)
        for (int y = 0; y < 2; ++y)
          for (int a = 0; a < 2; ++a) t.pi[b][y][a] = values[k++];
    }
  }
  return p;
}

// ===========================================================================
// Regression-based nuisance models
// ===========================================================================

/// Models of the predictive-value factorisation. Y and A models are fitted
/// to records with those variables observed; Z and B models to all records.
struct NuisanceSpecs {
  DesignSpec y;  // Y ~ A, Z, B, covariates
  DesignSpec a;  // A ~ Z, B, covariates
  DesignSpec z;  // Z ~ B, covariates
  DesignSpec b;  // B ~ covariates
};

/// Models used when B is taken as the true exposure: Pr(Z) Pr(B|Z) Pr(Y|Z,B).
struct OutcomeOnlySpecs {
  DesignSpec y;  // Y ~ Z, B, covariates
  DesignSpec b;  // B ~ Z, covariates
  DesignSpec z;  // Z ~ covariates
};

namespace detail {

inline void check_spec(const DesignSpec& s, const std::string& response,
                       std::initializer_list<const char*> allowed_roles, const char* what) {
  if (s.response != response)
    throw FormulaError(std::string(what) + " model must have response " + response + ", got " +
                       s.response);
  for (const auto& t : s.terms)
    for (const auto& v : t) {
      const bool role = v == "Z" || v == "B" || v == "Y" || v == "A";
      if (!role) continue;
      bool ok = false;
      for (const char* r : allowed_roles) ok = ok || v == r;
      if (!ok)
        throw FormulaError(std::string(what) + " model may not use " + v + ": " + s.to_string());
    }
}

}  // namespace detail

inline void validate(const NuisanceSpecs& s) {
  detail::check_spec(s.y, "Y", {"A", "Z", "B"}, "outcome");
  detail::check_spec(s.a, "A", {"Z", "B"}, "exposure");
  detail::check_spec(s.z, "Z", {"B"}, "surrogate outcome");
  detail::check_spec(s.b, "B", {}, "surrogate exposure");
}

inline void validate(const OutcomeOnlySpecs& s) {
  detail::check_spec(s.y, "Y", {"Z", "B"}, "outcome");
  detail::check_spec(s.b, "B", {"Z"}, "surrogate exposure");
  detail::check_spec(s.z, "Z", {}, "surrogate outcome");
}

inline FitOptions nuisance_fit_options() {
  FitOptions o;
  o.alias = AliasPolicy::kDrop;
  return o;
}

/// Shared fit store: identical specs are fitted once; optional warm starts.
class FitCache {
 public:
  explicit FitCache(const Dataset& ds, const FitCache* warm = nullptr) : ds_(ds), warm_(warm) {}

  const LogisticFit& get(const DesignSpec& spec) {
    const std::string key = spec.to_string();
    for (auto& [k, f] : fits_)
      if (k == key) return f;
    FitOptions opt = nuisance_fit_options();
    if (warm_)
      for (const auto& [k, f] : warm_->fits_)
        if (k == key) opt.start = f.coefficients;
    fits_.emplace_back(key, fit_formula(ds_, spec, opt));
    return fits_.back().second;
  }

  const Dataset& data() const { return ds_; }

 private:
  const Dataset& ds_;
  const FitCache* warm_;
  std::deque<std::pair<std::string, LogisticFit>> fits_;
};

struct NuisanceModels {
  NuisanceSpecs specs;
  LogisticFit y, a, z, b;
};

inline NuisanceModels fit_nuisance_models(const Dataset& ds, const NuisanceSpecs& specs,
                                          FitCache* cache = nullptr) {
  validate(specs);
  FitCache local(ds);
  FitCache& c = cache ? *cache : local;
  NuisanceModels m;
  m.specs = specs;
  m.y = c.get(specs.y);
  m.a = c.get(specs.a);
  m.z = c.get(specs.z);
  m.b = c.get(specs.b);
  return m;
}

struct OutcomeOnlyModels {
  OutcomeOnlySpecs specs;
  LogisticFit y, b, z;
};

inline OutcomeOnlyModels fit_outcome_only_models(const Dataset& ds, const OutcomeOnlySpecs& specs,
                                                 FitCache* cache = nullptr) {
  validate(specs);
  FitCache local(ds);
  FitCache& c = cache ? *cache : local;
  OutcomeOnlyModels m;
  m.specs = specs;
  m.y = c.get(specs.y);
  m.b = c.get(specs.b);
  m.z = c.get(specs.z);
  return m;
}

/// Predictive-value parameters at each record's own covariates.
inline std::vector<PredictiveStratum> predictive_strata(const NuisanceModels& m, const Dataset& ds) {
  const LinearPredictor py(m.y, m.specs.y, ds), pa(m.a, m.specs.a, ds), pz(m.z, m.specs.z, ds),
      pb(m.b, m.specs.b, ds);
  std::vector<PredictiveStratum> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    PredictiveStratum& s = out[i];
    s.delta_star = pb.prob(i);
    for (int b = 0; b < 2; ++b) {
      s.epsilon_star[b] = pz.prob(i, {.b = b});
      for (int z = 0; z < 2; ++z) {
        s.lambda_star[z][b] = pa.prob(i, {.z = z, .b = b});
        for (int a = 0; a < 2; ++a) s.pi_star[a][z][b] = py.prob(i, {.z = z, .b = b, .a = a});
      }
    }
  }
  return out;
}

/// Sensitivity/specificity parameters with B taken as the true exposure
/// (lambda is the identity channel), derived at each record's covariates
/// from the joint Pr(Z|L) Pr(B|Z,L) Pr(Y|Z,B,L).
inline SensSpecStratum outcome_only_stratum(double pz1, const double pb1[2], const double py1[2][2]) {
  // p[z][b][y]
  double p[2][2][2];
  for (int z = 0; z < 2; ++z)
    for (int b = 0; b < 2; ++b)
      for (int y = 0; y < 2; ++y) p[z][b][y] = bern(pz1, z) * bern(pb1[z], b) * bern(py1[z][b], y);
  SensSpecStratum s;
  double pa1 = 0.0;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y) pa1 += p[z][1][y];
  s.delta = pa1;
  for (int a = 0; a < 2; ++a) {
    const double pa = p[0][a][0] + p[0][a][1] + p[1][a][0] + p[1][a][1];
    s.epsilon[a] = detail::conditional(p[0][a][1] + p[1][a][1], pa,
                                       [a] { return "[a=" + std::to_string(a) + "]"; });
    for (int y = 0; y < 2; ++y) {
      s.lambda[y][a] = a;
      const double pi = detail::conditional(p[1][a][y], p[0][a][y] + p[1][a][y], [a, y] {
        return "[y=" + std::to_string(y) + ",a=" + std::to_string(a) + "]";
      });
      s.pi[a][y][a] = pi;
      s.pi[1 - a][y][a] = pi;  // unreachable under the identity channel
    }
  }
  return s;
}

inline std::vector<SensSpecStratum> outcome_only_strata(const OutcomeOnlyModels& m, const Dataset& ds) {
  const LinearPredictor py(m.y, m.specs.y, ds), pb(m.b, m.specs.b, ds), pz(m.z, m.specs.z, ds);
  std::vector<SensSpecStratum> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double z1 = pz.prob(i);
    double b1[2], y1[2][2];
    for (int z = 0; z < 2; ++z) {
      b1[z] = pb.prob(i, {.z = z});
      for (int b = 0; b < 2; ++b) y1[z][b] = py.prob(i, {.z = z, .b = b});
    }
    out[i] = outcome_only_stratum(z1, b1, y1);
  }
  return out;
}

/// Predictive-value parameters implied by fitted models at L = 0 and L = 1
/// (single covariate named `covariate`).
inline PredictiveValueParams tabulate_predictive(const NuisanceModels& m,
                                                 const std::string& covariate = "L") {
  Dataset grid({covariate});
  const double l0 = 0.0, l1 = 1.0;
  grid.append_unchecked(0, 0, 0, 0, kMissing, kMissing, &l0);
  grid.append_unchecked(0, 0, 0, 0, kMissing, kMissing, &l1);
  const auto strata = predictive_strata(m, grid);
  return {{strata[0], strata[1]}};
}

}  // namespace ipwm
