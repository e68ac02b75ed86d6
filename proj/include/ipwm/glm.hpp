#pragma once

// Logistic regression by iteratively reweighted least squares (Newton on the
// Bernoulli log-likelihood) with step halving, design construction from
// formulas, and a fast evaluator for predictions at counterfactual values of
// Z, B, Y and A.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/formula.hpp"

namespace ipwm {

enum class AliasPolicy {
  kError,  // rank deficiency throws SingularDesignError
  kDrop,   // dependent columns get coefficient 0 and are flagged
};

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-10;        // on |change in deviance|
  double score_tol = 1e-9;   // max-norm of the score required to stop early
  double rank_tol = 1e-10;
  AliasPolicy alias = AliasPolicy::kError;
  std::optional<Eigen::VectorXd> start;
};

struct LogisticFit {
  Eigen::VectorXd coefficients;
  std::vector<std::string> columns;
  std::vector<bool> aliased;
  bool converged = false;
  bool boundary = false;   // some fitted probability numerically 0 or 1
  int iterations = 0;
  double deviance = 0.0;
  double score_max = 0.0;  // max |X'W(y - p)| at the returned coefficients
};

namespace detail {

/// Flags columns that are (numerically) linear combinations of earlier ones,
/// using a left-looking Cholesky of the Gram matrix that skips such columns.
/// A column is dependent when its residual diagonal falls below
/// rank_tol times its own diagonal (1 - R^2 on the earlier columns).
inline std::vector<bool> find_aliased(const Eigen::MatrixXd& gram, double rank_tol) {
  const Eigen::Index p = gram.rows();
  std::vector<bool> aliased(static_cast<std::size_t>(p), false);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ajj = gram(j, j);
    double d = ajj;
    for (Eigen::Index k = 0; k < j; ++k)
      if (!aliased[k]) d -= L(j, k) * L(j, k);
    if (!(ajj > 0.0) || d <= rank_tol * ajj) {
      aliased[j] = true;
      continue;
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      double s = gram(i, j);
      for (Eigen::Index k = 0; k < j; ++k)
        if (!aliased[k]) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return aliased;
}

inline double binomial_deviance(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double p = clamp_prob(expit(eta[i]));
    dev -= w[i] * (y[i] > 0.5 ? std::log(p) : std::log1p(-p));
  }
  return 2.0 * dev;
}

}  // namespace detail

/// Weighted maximum likelihood for Pr(y=1|x) = expit(x'beta).
inline LogisticFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::optional<Eigen::VectorXd>& case_weights = std::nullopt,
                                const FitOptions& opt = {},
                                std::vector<std::string> columns = {}) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 1 || p < 1) throw InputError("design must have at least one row and one column");
  if (y.size() != n) throw InputError("response length does not match design rows");
  if (columns.empty())
    for (Eigen::Index j = 0; j < p; ++j) columns.push_back("x" + std::to_string(j));
  if (static_cast<Eigen::Index>(columns.size()) != p)
    throw InputError("column name count does not match design");
  if (!X.allFinite()) throw InputError("non-finite value in design matrix");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(y[i] == 0.0 || y[i] == 1.0)) throw InputError("response must be 0/1");
  Eigen::VectorXd w = case_weights ? *case_weights : Eigen::VectorXd::Ones(n);
  if (w.size() != n) throw InputError("case weight length does not match design rows");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw InputError("case weights must be finite and >= 0");

  LogisticFit fit;
  fit.columns = columns;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  {
    const Eigen::MatrixXd xs = X.array().colwise() * w.array().sqrt();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  }
  fit.aliased = detail::find_aliased(gram, opt.rank_tol);
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!fit.aliased[j]) {
      active.push_back(j);
    } else if (opt.alias == AliasPolicy::kError) {
      throw SingularDesignError(columns[j], static_cast<std::size_t>(j));
    }
  }
  const Eigen::Index q = static_cast<Eigen::Index>(active.size());
  fit.coefficients = Eigen::VectorXd::Zero(p);
  if (q == 0) {
    fit.deviance = detail::binomial_deviance(Eigen::VectorXd::Zero(n), y, w);
    return fit;
  }

  Eigen::MatrixXd Xa;
  const bool full = q == p;
  if (!full) {
    Xa.resize(n, q);
    for (Eigen::Index k = 0; k < q; ++k) Xa.col(k) = X.col(active[k]);
  }
  const Eigen::MatrixXd& Xd = full ? X : Xa;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  if (opt.start && opt.start->size() == p) {
    for (Eigen::Index k = 0; k < q; ++k) beta[k] = (*opt.start)[active[k]];
    if (!beta.allFinite()) beta.setZero();
  }

  Eigen::VectorXd eta = Xd * beta;
  double dev = detail::binomial_deviance(eta, y, w);
  Eigen::VectorXd mu(n), r(n), sw(n), g(q), beta_new(q), eta_new(n);
  Eigen::MatrixXd H(q, q), Xw(n, q);
  bool dev_converged = false;
  int stalled = 0;
  int it = 0;
  auto score_at = [&](const Eigen::VectorXd& e) {
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = expit(e[i]);
      r[i] = w[i] * (y[i] - mu[i]);
    }
    g.noalias() = Xd.transpose() * r;
    return g.cwiseAbs().maxCoeff();
  };
  double score = score_at(eta);

  for (it = 1; it <= opt.max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) sw[i] = std::sqrt(w[i] * mu[i] * (1.0 - mu[i]));
    Xw = Xd.array().colwise() * sw.array();
    H.setZero();
    H.selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd delta = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !delta.allFinite()) {
      // Information matrix numerically singular (separation); take a
      // gradient-scaled step instead so the deviance can still decrease.
      const double d = H.diagonal().cwiseAbs().maxCoeff();
      delta = g / (d > 0.0 ? d : 1.0);
    }

    double step = 1.0;
    bool accepted = false;
    double dev_new = dev;
    for (int h = 0; h < 40; ++h) {
      beta_new = beta + step * delta;
      eta_new.noalias() = Xd * beta_new;
      dev_new = detail::binomial_deviance(eta_new, y, w);
      if (std::isfinite(dev_new) && dev_new <= dev + 1e-12 * std::abs(dev)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double change = std::abs(dev - dev_new);
    dev_converged = change < opt.tol ||
                    change <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(dev_new);
    beta = beta_new;
    eta = eta_new;
    dev = dev_new;
    score = score_at(eta);
    if (dev_converged && score <= opt.score_tol) break;
    stalled = dev_converged ? stalled + 1 : 0;
    if (stalled >= 3) break;
    if (dev_converged) {
      bool at_edge = false;
      for (Eigen::Index i = 0; i < n && !at_edge; ++i)
        at_edge = w[i] > 0.0 && (mu[i] < 1e-10 || mu[i] > 1.0 - 1e-10);
      if (at_edge) break;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] > 0.0 && (mu[i] < 1e-10 || mu[i] > 1.0 - 1e-10)) {
      fit.boundary = true;
      break;
    }
  for (Eigen::Index k = 0; k < q; ++k) fit.coefficients[active[k]] = beta[k];
  fit.iterations = std::min(it, opt.max_iter);
  fit.deviance = dev;
  fit.score_max = score;
  fit.converged = dev_converged && !fit.boundary && beta.allFinite();
  return fit;
}

/// expit(row . coefficients), clamped to [1e-12, 1 - 1e-12].
inline double predict_prob(const LogisticFit& fit, const Eigen::VectorXd& row) {
  if (row.size() != fit.coefficients.size())
    throw InputError("row length " + std::to_string(row.size()) + " does not match " +
                     std::to_string(fit.coefficients.size()) + " coefficients");
  return clamp_prob(expit(row.dot(fit.coefficients)));
}

inline double predict_prob(const LogisticFit& fit, const std::vector<double>& row) {
  return predict_prob(fit, Eigen::Map<const Eigen::VectorXd>(row.data(),
                                                             static_cast<Eigen::Index>(row.size())));
}

// ===========================================================================
// Designs from datasets
// ===========================================================================

/// A formula variable resolved against a dataset.
struct VarRef {
  enum Kind { kZ = 0, kB = 1, kY = 2, kA = 3, kCov = 4 } kind = kZ;
  std::size_t cov = 0;

  double value(const Dataset& ds, std::size_t i) const {
    switch (kind) {
      case kZ: return ds.z(i);
      case kB: return ds.b(i);
      case kY: return ds.y(i);
      case kA: return ds.a(i);
      default: return ds.cov(i, cov);
    }
  }
  bool observed(const Dataset& ds, std::size_t i) const {
    if (kind == kY) return ds.y(i) != kMissing;
    if (kind == kA) return ds.a(i) != kMissing;
    return true;
  }
};

inline VarRef resolve(const std::string& name, const Dataset& ds) {
  if (name == "Z") return {VarRef::kZ, 0};
  if (name == "B") return {VarRef::kB, 0};
  if (name == "Y") return {VarRef::kY, 0};
  if (name == "A") return {VarRef::kA, 0};
  const auto& names = ds.covariate_names();
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return {VarRef::kCov, k};
  throw FormulaError("unknown variable '" + name + "'");
}

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  std::vector<std::string> columns;
  std::vector<std::size_t> rows;  // dataset row of each design row
};

/// Rows are those with every formula variable observed and positive weight;
/// case weights are the dataset frequencies. Columns: intercept, then terms.
inline Design build_design(const Dataset& ds, const DesignSpec& spec) {
  const VarRef resp = resolve(spec.response, ds);
  std::vector<std::vector<VarRef>> terms;
  for (const auto& t : spec.terms) {
    std::vector<VarRef> refs;
    for (const auto& v : t) refs.push_back(resolve(v, ds));
    terms.push_back(std::move(refs));
  }
  Design d;
  if (spec.intercept) d.columns.push_back("(Intercept)");
  for (const auto& t : spec.terms) d.columns.push_back(term_name(t));
  if (d.columns.empty()) throw FormulaError("formula has no columns: " + spec.to_string());

  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.freq(i) <= 0.0 || !resp.observed(ds, i)) continue;
    bool ok = true;
    for (const auto& t : terms)
      for (const auto& v : t) ok = ok && v.observed(ds, i);
    if (ok) d.rows.push_back(i);
  }
  if (d.rows.empty())
    throw InputError("no records with all variables of '" + spec.to_string() + "' observed");

  const auto n = static_cast<Eigen::Index>(d.rows.size());
  const auto p = static_cast<Eigen::Index>(d.columns.size());
  d.x.resize(n, p);
  d.y.resize(n);
  d.w.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = d.rows[static_cast<std::size_t>(r)];
    Eigen::Index c = 0;
    if (spec.intercept) d.x(r, c++) = 1.0;
    for (const auto& t : terms) {
      double v = 1.0;
      for (const auto& ref : t) v *= ref.value(ds, i);
      d.x(r, c++) = v;
    }
    d.y[r] = resp.value(ds, i);
    d.w[r] = ds.freq(i);
  }
  return d;
}

inline LogisticFit fit_logistic(const Design& d, const FitOptions& opt = {}) {
  return fit_logistic(d.x, d.y, d.w, opt, d.columns);
}

inline LogisticFit fit_formula(const Dataset& ds, const DesignSpec& spec, const FitOptions& opt = {}) {
  return fit_logistic(build_design(ds, spec), opt);
}

// ===========================================================================
// Counterfactual prediction
// ===========================================================================

/// Values to substitute for Z, B, Y, A when predicting; -1 keeps the
/// record's own value.
struct Roles {
  int z = -1, b = -1, y = -1, a = -1;
};

/// Splits the linear predictor of a fitted model into a per-record part that
/// depends only on covariates and a small set of terms involving Z/B/Y/A,
/// so predictions at substituted role values cost O(#role terms).
class LinearPredictor {
 public:
  LinearPredictor() = default;

  LinearPredictor(const LogisticFit& fit, const DesignSpec& spec, const Dataset& ds)
      : ds_(&ds) {
    const std::size_t n = ds.size();
    base_.assign(n, 0.0);
    std::size_t c = 0;
    if (spec.intercept) {
      const double b0 = fit.coefficients[0];
      for (auto& v : base_) v = b0;
      c = 1;
    }
    std::vector<std::vector<VarRef>> cov_parts;
    for (const auto& t : spec.terms) {
      const double coef = fit.coefficients[static_cast<Eigen::Index>(c++)];
      if (coef == 0.0) continue;
      unsigned mask = 0;
      std::vector<VarRef> covs;
      for (const auto& v : t) {
        const VarRef ref = resolve(v, ds);
        if (ref.kind == VarRef::kCov) covs.push_back(ref);
        else mask |= 1u << ref.kind;
      }
      if (mask == 0) {
        for (std::size_t i = 0; i < n; ++i) {
          double v = coef;
          for (const auto& ref : covs) v *= ds.cov(i, ref.cov);
          base_[i] += v;
        }
      } else {
        RoleTerm rt{coef, mask, covs.empty() ? kNone : cov_parts.size()};
        if (!covs.empty()) cov_parts.push_back(covs);
        terms_.push_back(rt);
      }
    }
    ncov_ = cov_parts.size();
    covprod_.assign(n * ncov_, 1.0);
    for (std::size_t k = 0; k < ncov_; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        double v = 1.0;
        for (const auto& ref : cov_parts[k]) v *= ds.cov(i, ref.cov);
        covprod_[i * ncov_ + k] = v;
      }
  }

  double eta(std::size_t i, const Roles& r = {}) const {
    double e = base_[i];
    if (terms_.empty()) return e;
    const int vals[4] = {pick(r.z, ds_->z(i)), pick(r.b, ds_->b(i)), pick(r.y, ds_->y(i)),
                         pick(r.a, ds_->a(i))};
    for (const auto& t : terms_) {
      double v = t.coef;
      for (unsigned k = 0; k < 4; ++k) {
        if (!((t.mask >> k) & 1u)) continue;
        if (vals[k] < 0) throw InputError("prediction needs an unobserved Y or A");
        v *= vals[k];
      }
      if (v == 0.0) continue;
      if (t.cov != kNone) v *= covprod_[i * ncov_ + t.cov];
      e += v;
    }
    return e;
  }

  double prob(std::size_t i, const Roles& r = {}) const { return clamp_prob(expit(eta(i, r))); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct RoleTerm {
    double coef;
    unsigned mask;
    std::size_t cov;
  };
  static int pick(int override_value, int own) { return override_value >= 0 ? override_value : own; }

  const Dataset* ds_ = nullptr;
  std::vector<double> base_;
  std::vector<RoleTerm> terms_;
  std::vector<double> covprod_;
  std::size_t ncov_ = 0;
};

}  // namespace ipwm
