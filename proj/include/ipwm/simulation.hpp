#pragma once

// Monte Carlo study of the five estimators.
//
// Data-generating process for one record:
//   V ~ N(0, R) in 10 dimensions; L_j = I(V_j > 0) for the dichotomised
//   components and L_j = V_j otherwise
//   U1 ~ Bern(expit(eta0)),  U2 ~ Bern(expit(mu0))
//   A  ~ Bern(expit(alpha0 + sum_j alpha_j L_j + alpha11 U1))
//   Y(a) = I(U3 < expit(beta0 + gamma a + sum_j beta_j L_j + beta11 U2)),  Y = Y(A)
//   Z = U2;  B = U1 with exposure misclassification, B = A without
//   R ~ Bern(expit(xi0 + xi1 Z + xi2 B + xi3 Z B)), both Y and A observed iff R = 1
//
// Random draws per record, in order: 10 normals, U1, U2, the A uniform, U3,
// the R uniform. Replicate r of scenario k uses make_rng(seed, {k, r}); its
// bootstrap uses master seed mix_seed(seed, {k, r, 1}).

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ipwm/bootstrap.hpp"
#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/estimators.hpp"
#include "ipwm/parallel.hpp"
#include "ipwm/rng.hpp"

namespace ipwm {

inline constexpr int kNumSimCovariates = 10;

/// Correlation between latent normals i and j (1-based).
struct CorrelationPair {
  int i = 1, j = 2;
  double rho = 0.0;
};

struct ScenarioConfig {
  int id = 0;
  std::string name;
  std::size_t n = 5000;
  bool exposure_misclassification = false;

  double mu0 = -2.0;
  double eta0 = 0.0;
  double alpha0 = 0.0;
  std::array<double, kNumSimCovariates> alpha{0.8, -0.25, 0.6, -0.4, -0.8, -0.5, 0.7, 0.0, 0.0, 0.0};
  double alpha11 = 0.0;
  double beta0 = -3.85;
  std::array<double, kNumSimCovariates> beta{0.3, -0.36, -0.73, -0.2, 0.0, 0.0, 0.0, 0.71, -0.19, 0.26};
  double beta11 = 2.0;
  double gamma = -0.431;
  double xi0 = -1.5, xi1 = 2.0, xi2 = 1.0, xi3 = -1.0;

  std::vector<CorrelationPair> correlations{{1, 5, 0.2}, {2, 6, 0.9}, {3, 8, 0.2}, {4, 9, 0.9}};
  std::vector<int> dichotomised{1, 3, 5, 6, 8, 9};  // 1-based

  int nsim = 200;
  int boot_b = 200;
  std::uint64_t seed = 1;
  double target_logor = -0.4;

  void validate() const {
    if (n < 2) throw ConfigError("scenario sample size must be at least 2");
    if (nsim < 1) throw ConfigError("nsim must be at least 1");
    if (boot_b < 2) throw ConfigError("boot_b must be at least 2");
    if (!exposure_misclassification && alpha11 != 0.0)
      throw ConfigError("alpha11 must be 0 when B equals A");
    const auto finite = [](double v) { return std::isfinite(v); };
    for (double v : {mu0, eta0, alpha0, alpha11, beta0, beta11, gamma, xi0, xi1, xi2, xi3, target_logor})
      if (!finite(v)) throw ConfigError("scenario coefficients must be finite");
    for (double v : alpha)
      if (!finite(v)) throw ConfigError("scenario coefficients must be finite");
    for (double v : beta)
      if (!finite(v)) throw ConfigError("scenario coefficients must be finite");
    for (const auto& c : correlations) {
      if (c.i < 1 || c.i > kNumSimCovariates || c.j < 1 || c.j > kNumSimCovariates || c.i == c.j)
        throw ConfigError("correlation pair indices must be distinct and in 1..10");
      if (!(std::abs(c.rho) < 1.0)) throw ConfigError("correlations must lie in (-1, 1)");
    }
    for (int k : dichotomised)
      if (k < 1 || k > kNumSimCovariates) throw ConfigError("dichotomised index out of 1..10");
  }
};

inline std::vector<std::string> sim_covariate_names() {
  std::vector<std::string> out;
  for (int k = 1; k <= kNumSimCovariates; ++k) out.push_back("L" + std::to_string(k));
  return out;
}

inline constexpr int kNumScenarios = 36;

/// Built-in scenarios 1..36.
inline ScenarioConfig scenario(int id) {
  if (id < 1 || id > kNumScenarios)
    throw ConfigError("unknown scenario " + std::to_string(id) + " (expected 1..36)");
  struct Row {
    bool mis;
    double mu0, alpha11, beta11, xi0;
  };
  // Rows 1..9 of each block; gamma depends on beta0.
  static constexpr Row rows[9] = {
      {false, -2, 0, 2, -1.5}, {false, -3, 0, 2, -1.5}, {false, -2, 0, 4, -1.5},
      {false, -2, 0, 2, -2.5}, {true, -2, 2, 2, -1.5},  {true, -3, 2, 2, -1.5},
      {true, -2, 4, 2, -1.5},  {true, -2, 2, 4, -1.5},  {true, -2, 2, 2, -2.5}};
  static constexpr double gamma_rare[9] = {-0.431, -0.417, -0.624, -0.431, -0.431,
                                           -0.417, -0.431, -0.624, -0.431};
  static constexpr double gamma_common[9] = {-0.470, -0.445, -0.641, -0.470, -0.470,
                                             -0.445, -0.470, -0.641, -0.470};
  const int k = (id - 1) % 9;
  const int block = (id - 1) / 9;  // 0: n 5000 rare, 1: n 10000 rare, 2: 5000 common, 3: 10000 common
  ScenarioConfig c;
  c.id = id;
  c.name = "scenario-" + std::to_string(id);
  c.n = (block % 2 == 0) ? 5000 : 10000;
  c.exposure_misclassification = rows[k].mis;
  c.mu0 = rows[k].mu0;
  c.alpha11 = rows[k].alpha11;
  c.beta11 = rows[k].beta11;
  c.xi0 = rows[k].xi0;
  c.beta0 = block < 2 ? -3.85 : -2.0;
  c.gamma = block < 2 ? gamma_rare[k] : gamma_common[k];
  return c;
}

/// Accepts "7" or "scenario-7".
inline ScenarioConfig scenario(const std::string& name) {
  std::string s = name;
  const std::string prefix = "scenario-";
  if (s.rfind(prefix, 0) == 0) s = s.substr(prefix.size());
  int id = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, id);
  if (s.empty() || res.ec != std::errc() || res.ptr != last)
    throw ConfigError("unknown scenario '" + name + "'");
  return scenario(id);
}

/// Draws covariate vectors with the configured latent correlation.
class CovariateSampler {
 public:
  explicit CovariateSampler(const ScenarioConfig& cfg) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(kNumSimCovariates, kNumSimCovariates);
    for (const auto& c : cfg.correlations) {
      r(c.i - 1, c.j - 1) = c.rho;
      r(c.j - 1, c.i - 1) = c.rho;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
      throw ConfigError("latent correlation matrix is not positive definite");
    chol_ = llt.matrixL();
    dich_.fill(false);
    for (int k : cfg.dichotomised) dich_[static_cast<std::size_t>(k - 1)] = true;
  }

  void operator()(Rng& rng, NormalSampler& normal, double* out) const {
    double e[kNumSimCovariates];
    for (double& v : e) v = normal(rng);
    for (int i = 0; i < kNumSimCovariates; ++i) {
      double v = 0.0;
      for (int j = 0; j <= i; ++j) v += chol_(i, j) * e[j];
      out[i] = dich_[static_cast<std::size_t>(i)] ? (v > 0.0 ? 1.0 : 0.0) : v;
    }
  }

 private:
  Eigen::MatrixXd chol_;
  std::array<bool, kNumSimCovariates> dich_{};
};

/// n covariate vectors, row-major (n x 10).
inline std::vector<double> generate_covariates(std::size_t n, Rng& rng,
                                               const ScenarioConfig& cfg = ScenarioConfig{}) {
  const CovariateSampler sample(cfg);
  NormalSampler normal;
  std::vector<double> out(n * kNumSimCovariates);
  for (std::size_t i = 0; i < n; ++i) sample(rng, normal, out.data() + i * kNumSimCovariates);
  return out;
}

/// Quantities the analyst never sees.
struct SimLatent {
  int y = 0, a = 0;
  int u1 = 0, u2 = 0;
  double u3 = 0.0;
  int y0 = 0, y1 = 0;
};

struct SimDataset {
  Dataset data{sim_covariate_names()};
  std::vector<SimLatent> latent;
};

inline SimDataset generate_dataset(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  const CovariateSampler sample(cfg);
  NormalSampler normal;
  SimDataset out;
  out.data.reserve(cfg.n);
  out.latent.reserve(cfg.n);
  double l[kNumSimCovariates];
  for (std::size_t i = 0; i < cfg.n; ++i) {
    sample(rng, normal, l);
    SimLatent t;
    t.u1 = bernoulli(rng, expit(cfg.eta0)) ? 1 : 0;
    t.u2 = bernoulli(rng, expit(cfg.mu0)) ? 1 : 0;
    double ea = cfg.alpha0 + cfg.alpha11 * t.u1;
    double ey = cfg.beta0 + cfg.beta11 * t.u2;
    for (int k = 0; k < kNumSimCovariates; ++k) {
      ea += cfg.alpha[static_cast<std::size_t>(k)] * l[k];
      ey += cfg.beta[static_cast<std::size_t>(k)] * l[k];
    }
    t.a = uniform01(rng) < expit(ea) ? 1 : 0;
    t.u3 = uniform01(rng);
    t.y0 = t.u3 < expit(ey) ? 1 : 0;
    t.y1 = t.u3 < expit(ey + cfg.gamma) ? 1 : 0;
    t.y = t.a ? t.y1 : t.y0;
    const int z = t.u2;
    const int b = cfg.exposure_misclassification ? t.u1 : t.a;
    const double pr = expit(cfg.xi0 + cfg.xi1 * z + cfg.xi2 * b + cfg.xi3 * z * b);
    const int r = uniform01(rng) < pr ? 1 : 0;
    out.data.append_unchecked(z, b, r, r, r ? t.y : kMissing, r ? t.a : kMissing, l);
    out.latent.push_back(t);
  }
  return out;
}

namespace detail {

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

}  // namespace detail

/// Counterfactual risks over a fixed Monte Carlo sample of covariates, with
/// U2 integrated out exactly. Reusing one sample for every gamma keeps the
/// map gamma -> log OR smooth.
class MarginalTruth {
 public:
  MarginalTruth(const ScenarioConfig& cfg, std::size_t n_mc, Rng& rng)
      : q_(expit(cfg.mu0)), beta11_(cfg.beta11) {
    if (n_mc < 10000) throw InputError("n_mc must be at least 10000");
    const CovariateSampler sample(cfg);
    NormalSampler normal;
    base_.resize(n_mc);
    double l[kNumSimCovariates];
    for (std::size_t i = 0; i < n_mc; ++i) {
      sample(rng, normal, l);
      double e = cfg.beta0;
      for (int k = 0; k < kNumSimCovariates; ++k) e += cfg.beta[static_cast<std::size_t>(k)] * l[k];
      base_[i] = e;
    }
  }

  /// E[Y(a)].
  double risk(int a, double gamma) const {
    detail::NeumaierSum s;
    const double shift = a ? gamma : 0.0;
    for (double e : base_) s.add((1.0 - q_) * expit(e + shift) + q_ * expit(e + shift + beta11_));
    return s.value() / static_cast<double>(base_.size());
  }

  double logor(double gamma) const { return logit(risk(1, gamma)) - logit(risk(0, gamma)); }

 private:
  double q_, beta11_;
  std::vector<double> base_;
};

/// logit E[Y(1)] - logit E[Y(0)] by Monte Carlo over L.
inline double true_marginal_logor(const ScenarioConfig& cfg, double gamma, std::size_t n_mc, Rng& rng) {
  return MarginalTruth(cfg, n_mc, rng).logor(gamma);
}

/// Solves true_marginal_logor(gamma) = target by bisection on [-5, 5]. The
/// map is checked to be increasing on a grid first; `tol` bounds the final
/// residual.
inline double calibrate_gamma(const ScenarioConfig& cfg, double target, double tol,
                              std::size_t n_mc, Rng& rng) {
  const MarginalTruth truth(cfg, n_mc, rng);
  double lo = -5.0, hi = 5.0;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20; ++k) {
    const double v = truth.logor(lo + (hi - lo) * k / 20.0);
    if (!(v > prev)) throw NonBracketingError("marginal log OR is not increasing in gamma");
    prev = v;
  }
  double flo = truth.logor(lo) - target, fhi = truth.logor(hi) - target;
  if (!(flo <= 0.0 && fhi >= 0.0))
    throw NonBracketingError("target log OR " + format_double(target) +
                             " is not attained for gamma in [-5, 5]");
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    const double f = truth.logor(mid) - target;
    if (f < 0.0) {
      lo = mid;
      flo = f;
    } else {
      hi = mid;
      fhi = f;
    }
  }
  const double g = 0.5 * (lo + hi);
  if (!(std::abs(truth.logor(g) - target) <= tol))
    throw NonBracketingError("calibration did not reach the requested tolerance");
  return g;
}

// ---------------------------------------------------------------------------
// Study runner

struct MetricsRow {
  int scenario = 0;
  Method method = Method::kCrude;
  double bias = 0.0, bse = 0.0, mse = 0.0, se = 0.0, sse = 0.0, cp = 0.0;
  std::size_t nsim = 0;    // replicates contributing
  std::size_t failed = 0;  // replicates excluded
};

struct ReplicateEstimate {
  std::optional<double> log_or;
  std::optional<BootstrapSummary> boot;
};

struct StudyOptions {
  std::optional<ModelSpecs> specs;  // default: main effects in L1..L10
  double s = kDefaultShrinkage;
  double level = 0.95;
  int threads = 1;
  std::optional<int> nsim;  // override cfg.nsim
  std::optional<int> boot_b;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct StudyResult {
  std::vector<MetricsRow> metrics;
  /// replicates[r][k] for method k of the requested list.
  std::vector<std::vector<ReplicateEstimate>> replicates;
};

namespace detail {

inline std::vector<std::optional<double>> point_estimates(const std::vector<Method>& methods,
                                                          EstimationContext& ctx,
                                                          const ModelSpecs& specs, double s) {
  std::vector<std::optional<double>> out;
  out.reserve(methods.size());
  for (const auto& o : estimate_many(methods, ctx, specs, s))
    out.push_back(o.result ? std::optional<double>(o.result->log_or) : std::nullopt);
  return out;
}

}  // namespace detail

/// Metrics from per-replicate estimates. A replicate counts for a method
/// when both its estimate and its bootstrap summary exist.
inline MetricsRow summarize_method(int scenario_id, Method method, double target,
                                   const std::vector<ReplicateEstimate>& reps) {
  MetricsRow m;
  m.scenario = scenario_id;
  m.method = method;
  std::vector<const ReplicateEstimate*> ok;
  for (const auto& r : reps) {
    if (r.log_or && r.boot) ok.push_back(&r);
    else ++m.failed;
  }
  m.nsim = ok.size();
  if (ok.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.bias = m.bse = m.mse = m.se = m.sse = m.cp = nan;
    return m;
  }
  const double k = static_cast<double>(ok.size());
  detail::NeumaierSum sum, var, cover;
  for (const auto* r : ok) {
    sum.add(*r->log_or);
    var.add(r->boot->se * r->boot->se);
    cover.add(r->boot->ci_low <= target && target <= r->boot->ci_high ? 1.0 : 0.0);
  }
  const double mean = sum.value() / k;
  detail::NeumaierSum dev;
  for (const auto* r : ok) dev.add((*r->log_or - mean) * (*r->log_or - mean));
  m.bias = mean - target;
  m.se = std::sqrt(dev.value() / k);
  m.mse = m.se * m.se + m.bias * m.bias;
  m.bse = m.se / std::sqrt(k);
  m.sse = std::sqrt(var.value() / k);
  m.cp = cover.value() / k;
  return m;
}

inline StudyResult run_study(const ScenarioConfig& cfg, const std::vector<Method>& methods,
                             const StudyOptions& opt = {}) {
  cfg.validate();
  if (methods.empty()) throw ConfigError("no methods selected");
  const int nsim = opt.nsim.value_or(cfg.nsim);
  const int boot_b = opt.boot_b.value_or(cfg.boot_b);
  if (nsim < 2) throw ConfigError("nsim must be at least 2");
  if (boot_b < 2) throw ConfigError("boot_b must be at least 2");
  const ModelSpecs specs = opt.specs.value_or(main_effects_specs(sim_covariate_names()));
  const auto id = static_cast<std::uint64_t>(cfg.id);

  StudyResult res;
  res.replicates.resize(static_cast<std::size_t>(nsim));
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(res.replicates.size(), opt.threads, [&](std::size_t r) {
    Rng rng = make_rng(cfg.seed, {id, r});
    const SimDataset sim = generate_dataset(cfg, rng);
    EstimationContext ctx(sim.data);
    const auto points = detail::point_estimates(methods, ctx, specs, opt.s);
    const auto boots = bootstrap_multi(
        sim.data,
        [&](const Dataset& bs) {
          EstimationContext c(bs, &ctx);
          return detail::point_estimates(methods, c, specs, opt.s);
        },
        points, boot_b, opt.level, mix_seed(cfg.seed, {id, r, 1}), 1);
    auto& row = res.replicates[r];
    row.resize(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
      row[k].log_or = points[k];
      row[k].boot = boots[k];
    }
    const std::size_t d = ++done;
    if (opt.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      opt.progress(d, res.replicates.size());
    }
  });

  for (std::size_t k = 0; k < methods.size(); ++k) {
    std::vector<ReplicateEstimate> col;
    col.reserve(res.replicates.size());
    for (const auto& row : res.replicates) col.push_back(row[k]);
    res.metrics.push_back(summarize_method(cfg.id, methods[k], cfg.target_logor, col));
  }
  return res;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "scenario,method,bias,bse,mse,se,sse,cp,nsim\n";
  for (const auto& m : rows)
    out << m.scenario << ',' << to_string(m.method) << ',' << format_double(m.bias) << ','
        << format_double(m.bse) << ',' << format_double(m.mse) << ',' << format_double(m.se) << ','
        << format_double(m.sse) << ',' << format_double(m.cp) << ',' << m.nsim << '\n';
}

// ---------------------------------------------------------------------------
// Standardisation oracle

struct StandardizedRisks {
  double risk0 = 0.0, risk1 = 0.0;
  double logor() const { return logit(risk1) - logit(risk0); }
};

/// E[Y(a)] = sum_l Pr(Y=1 | A=a, L=l) Pr(L=l) from an exact table with Y, A
/// and L axes (any Z, B axes are summed out).
inline StandardizedRisks standardized_risks(const CellCountTable& joint) {
  if (!joint.has(Var::Y) || !joint.has(Var::A))
    throw InputError("standardisation needs Y and A axes");
  const CellCountTable t = joint.collapse(bit(Var::Y) | bit(Var::A) | bit(Var::L));
  const int nl = t.has(Var::L) ? 2 : 1;
  const double total = t.total();
  if (!(total > 0.0)) throw InputError("empty table");
  double risk[2] = {0.0, 0.0};
  for (int l = 0; l < nl; ++l) {
    double pl = 0.0;
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) pl += t.at(0, 0, y, a, l);
    if (pl == 0.0) continue;
    for (int a = 0; a < 2; ++a) {
      const double n_al = t.at(0, 0, 0, a, l) + t.at(0, 0, 1, a, l);
      if (!(n_al > 0.0))
        throw PositivityError("no mass at A=" + std::to_string(a) + ", L=" + std::to_string(l));
      risk[a] += t.at(0, 0, 1, a, l) / n_al * (pl / total);
    }
  }
  return {risk[0], risk[1]};
}

inline double oracle_standardized_or(const CellCountTable& joint) {
  return standardized_risks(joint).logor();
}

}  // namespace ipwm
