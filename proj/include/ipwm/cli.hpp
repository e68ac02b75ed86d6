#pragma once

// Command implementations behind the `ipwm` executable. Each command writes
// its report to `out`, diagnostics to `err`, and returns the exit code.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ipwm/anchors.hpp"
#include "ipwm/bootstrap.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/estimators.hpp"
#include "ipwm/reinfarction.hpp"
#include "ipwm/scenario_io.hpp"
#include "ipwm/simulation.hpp"

namespace ipwm::cli {

struct RunConfig {
  std::string input;
  std::string formulas_file;
  std::string methods = "all";
  double s = kDefaultShrinkage;
  int boot = 0;
  double level = 0.95;
  std::optional<std::uint64_t> seed;
  std::optional<int> nsim;
  std::string scenario;
  std::string config_file;
  bool json = false;
  bool saturated = false;
  int threads = 1;
  std::size_t n_mc = 1000000;
  double target = -0.4;
  double tol = 0.005;
  bool progress = false;
  std::string replicates_out;
  std::string weights_out;
  CsvSchema schema;
};

namespace detail {

inline nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  return f;
}

inline nlohmann::json specs_json(const ModelSpecs& m) {
  return {{"ps", m.ps.to_string()},       {"cca", m.cca.to_string()},
          {"ipwm.y", m.ipwm.y.to_string()}, {"ipwm.a", m.ipwm.a.to_string()},
          {"ipwm.z", m.ipwm.z.to_string()}, {"ipwm.b", m.ipwm.b.to_string()},
          {"gp.y", m.gp.y.to_string()},     {"gp.b", m.gp.b.to_string()},
          {"gp.z", m.gp.z.to_string()}};
}

}  // namespace detail

inline int cmd_example(const RunConfig& cfg, std::ostream& out) {
  const AnchorChain chain = compute_anchor_chain(cfg.s);
  if (cfg.json) {
    nlohmann::json j;
    j["s"] = cfg.s;
    for (const auto& v : chain.values) j[v.key] = v.odds_ratio;
    out << j.dump(2) << '\n';
    return 0;
  }
  out << "Reinfarction example (odds ratios, s = " << format_double(cfg.s) << ")\n";
  for (const auto& v : chain.values) {
    std::ostringstream label;
    label << std::left << std::setw(42) << v.label;
    out << "  " << label.str() << std::fixed << std::setprecision(3) << v.odds_ratio << '\n';
  }
  out.unsetf(std::ios::floatfield);
  return 0;
}

/// Model formulas for an input dataset: main effects in every covariate, or
/// saturated in a single covariate, then any overrides from a formulas file.
inline ModelSpecs resolve_specs(const RunConfig& cfg, const Dataset& ds) {
  const auto& covs = ds.covariate_names();
  ModelSpecs specs;
  if (cfg.saturated) {
    if (covs.size() != 1) throw ConfigError("--saturated needs exactly one covariate");
    specs = saturated_specs(covs.front());
  } else {
    specs = main_effects_specs(covs);
  }
  if (!cfg.formulas_file.empty()) {
    std::ifstream f(cfg.formulas_file);
    if (!f) throw InputError("cannot open formulas file '" + cfg.formulas_file + "'");
    specs = read_model_specs(f, covs, specs);
  }
  validate(specs);
  return specs;
}

inline int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.input.empty()) throw ConfigError("estimate needs --input");
  const Dataset ds = ingest_csv(cfg.input, cfg.schema);
  const ModelSpecs specs = resolve_specs(cfg, ds);
  const auto methods = parse_methods(cfg.methods);
  const std::uint64_t seed = cfg.seed.value_or(1);

  EstimationContext ctx(ds);
  const auto outcomes = estimate_many(methods, ctx, specs, cfg.s);
  std::vector<std::optional<double>> points;
  for (const auto& o : outcomes)
    points.push_back(o.result ? std::optional<double>(o.result->log_or) : std::nullopt);

  std::vector<std::optional<BootstrapSummary>> boots(methods.size());
  if (cfg.boot > 0) {
    boots = bootstrap_multi(
        ds,
        [&](const Dataset& bs) {
          EstimationContext c(bs, &ctx);
          std::vector<std::optional<double>> v;
          for (const auto& o : estimate_many(methods, c, specs, cfg.s))
            v.push_back(o.result ? std::optional<double>(o.result->log_or) : std::nullopt);
          return v;
        },
        points, cfg.boot, cfg.level, seed, cfg.threads);
  }

  if (!cfg.weights_out.empty()) {
    const NuisanceModels m = fit_nuisance_models(ds, specs.ipwm, &ctx.fits());
    const auto strata = predictive_strata(m, ds);
    const WeightVector w = weights_joint_predictive(
        ds, [&](std::size_t i) -> const PredictiveStratum& { return strata[i]; }, prevalence_of_b(ds));
    auto f = detail::open_output(cfg.weights_out);
    write_weights_csv(f, ds, w);
  }

  int status = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (!outcomes[k].result) {
      status = 1;
      err << "error: " << to_string(methods[k]) << ": " << outcomes[k].error << '\n';
    } else if (cfg.boot > 0 && !boots[k]) {
      status = 1;
      err << "error: " << to_string(methods[k]) << ": most bootstrap replicates failed\n";
    }
  }

  if (cfg.json) {
    nlohmann::json j;
    j["records"] = ds.size();
    j["total_weight"] = ds.total_weight();
    j["s"] = cfg.s;
    j["formulas"] = detail::specs_json(specs);
    j["results"] = nlohmann::json::array();
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      nlohmann::json r;
      r["method"] = to_string(methods[k]);
      if (const auto& res = outcomes[k].result) {
        r["log_or"] = detail::number(res->log_or);
        r["or"] = detail::number(res->odds_ratio());
        r["p0"] = res->p0;
        r["p1"] = res->p1;
        r["p0_star"] = res->p0_star;
        r["p1_star"] = res->p1_star;
      } else {
        r["error"] = outcomes[k].error;
      }
      if (cfg.boot > 0 && boots[k]) {
        const auto& b = *boots[k];
        r["bootstrap"] = {{"replicates", cfg.boot},
                          {"used", b.replicates_used},
                          {"failed", b.replicates_failed},
                          {"level", cfg.level},
                          {"seed", seed},
                          {"se", detail::number(b.se)},
                          {"ci_low", detail::number(b.ci_low)},
                          {"ci_high", detail::number(b.ci_high)},
                          {"or_ci_low", detail::number(std::exp(b.ci_low))},
                          {"or_ci_high", detail::number(std::exp(b.ci_high))}};
      }
      j["results"].push_back(std::move(r));
    }
    out << j.dump(2) << '\n';
  } else {
    out << "method,log_or,or,p0,p1,se,ci_low,ci_high,boot_used,boot_failed,error\n";
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      out << to_string(methods[k]) << ',';
      if (const auto& res = outcomes[k].result)
        out << format_double(res->log_or) << ',' << format_double(res->odds_ratio()) << ','
            << format_double(res->p0) << ',' << format_double(res->p1) << ',';
      else
        out << ",,,,";
      if (boots[k])
        out << format_double(boots[k]->se) << ',' << format_double(boots[k]->ci_low) << ','
            << format_double(boots[k]->ci_high) << ',' << boots[k]->replicates_used << ','
            << boots[k]->replicates_failed << ',';
      else
        out << ",,,,,";
      std::string e = outcomes[k].error;
      for (char& c : e)
        if (c == ',' || c == '\n') c = ';';
      out << e << '\n';
    }
  }
  return status;
}

inline ScenarioConfig resolve_scenario(const RunConfig& cfg) {
  if (!cfg.config_file.empty() && !cfg.scenario.empty())
    throw ConfigError("give either --scenario or --config, not both");
  if (cfg.config_file.empty() && cfg.scenario.empty())
    throw ConfigError("a scenario is required (--scenario or --config)");
  ScenarioConfig sc = cfg.config_file.empty() ? scenario(cfg.scenario) : load_scenario_file(cfg.config_file);
  if (cfg.seed) sc.seed = *cfg.seed;
  if (cfg.nsim) sc.nsim = *cfg.nsim;
  if (cfg.boot > 0) sc.boot_b = cfg.boot;
  sc.validate();
  return sc;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ScenarioConfig sc = resolve_scenario(cfg);
  const auto methods = parse_methods(cfg.methods);
  StudyOptions opt;
  opt.s = cfg.s;
  opt.level = cfg.level;
  opt.threads = cfg.threads;
  if (cfg.saturated) throw ConfigError("--saturated does not apply to simulate");
  if (cfg.progress)
    opt.progress = [&err](std::size_t done, std::size_t total) {
      err << "\rreplicate " << done << '/' << total << std::flush;
      if (done == total) err << '\n';
    };
  const StudyResult res = run_study(sc, methods, opt);
  write_metrics_csv(out, res.metrics);
  if (!cfg.replicates_out.empty()) {
    auto f = detail::open_output(cfg.replicates_out);
    f << "scenario,replicate,method,log_or,boot_se,ci_low,ci_high,boot_used,boot_failed\n";
    for (std::size_t r = 0; r < res.replicates.size(); ++r)
      for (std::size_t k = 0; k < methods.size(); ++k) {
        const auto& e = res.replicates[r][k];
        f << sc.id << ',' << r << ',' << to_string(methods[k]) << ','
          << (e.log_or ? format_double(*e.log_or) : "") << ',';
        if (e.boot)
          f << format_double(e.boot->se) << ',' << format_double(e.boot->ci_low) << ','
            << format_double(e.boot->ci_high) << ',' << e.boot->replicates_used << ','
            << e.boot->replicates_failed;
        else
          f << ",,,,";
        f << '\n';
      }
  }
  int status = 0;
  for (const auto& m : res.metrics)
    if (m.failed > 0) {
      err << "warning: " << to_string(m.method) << " failed on " << m.failed << " replicate(s)\n";
      if (m.nsim == 0) status = 1;
    }
  return status;
}

/// Expected misclassified counts and validation-study counts of the
/// reinfarction example next to the published rounded values.
inline int cmd_expected_counts(const RunConfig& cfg, std::ostream& out) {
  const CellCountTable mis = reinfarction::expected_misclassified();
  const ValidationCounts val = reinfarction::expected_validation();
  const ValidationCounts printed = reinfarction::printed_validation_counts().swap_surrogates();

  struct Line {
    std::string table;
    int index;
    int z, b, y, a, l;  // -1: not applicable
    double expected, printed;
  };
  std::vector<Line> lines;
  for (const auto& row : reinfarction::kPrintedMisclassified)
    for (int zb = 0; zb < 4; ++zb) {
      const int z = zb >> 1, b = zb & 1;
      lines.push_back({"misclassified", CellCountTable::index(z, b, row.y, row.a, row.l), z, b, row.y,
                       row.a, row.l, mis.at(z, b, row.y, row.a, row.l),
                       static_cast<double>(row.zb[static_cast<std::size_t>(zb)])});
    }
  for (int l = 0; l < 2; ++l)
    for (int b = 0; b < 2; ++b)
      for (int z = 0; z < 2; ++z) {
        const int j = ValidationCounts::unvalidated_index(z, b, l);
        lines.push_back({"validation", j, z, b, -1, -1, l, val(j), printed(j)});
      }
  for (int l = 0; l < 2; ++l)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y)
        for (int b = 0; b < 2; ++b)
          for (int z = 0; z < 2; ++z) {
            const int j = ValidationCounts::validated_index(z, b, y, a, l);
            lines.push_back({"validation", j, z, b, y, a, l, val(j), printed(j)});
          }

  if (cfg.json) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : lines) {
      nlohmann::json r = {{"table", x.table}, {"index", x.index}, {"Z", x.z}, {"B", x.b},
                          {"L", x.l},         {"expected", x.expected}, {"printed", x.printed}};
      r["Y"] = x.y < 0 ? nlohmann::json(nullptr) : nlohmann::json(x.y);
      r["A"] = x.a < 0 ? nlohmann::json(nullptr) : nlohmann::json(x.a);
      j.push_back(std::move(r));
    }
    out << j.dump(2) << '\n';
    return 0;
  }
  auto opt = [](int v) { return v < 0 ? std::string() : std::to_string(v); };
  out << "table,index,Z,B,Y,A,L,expected,printed\n";
  for (const auto& x : lines) {
    std::ostringstream e;
    e << std::fixed << std::setprecision(3) << x.expected;
    out << x.table << ',' << x.index << ',' << x.z << ',' << x.b << ',' << opt(x.y) << ',' << opt(x.a)
        << ',' << x.l << ',' << e.str() << ',' << format_double(x.printed) << '\n';
  }
  return 0;
}

inline int cmd_calibrate_gamma(const RunConfig& cfg, std::ostream& out) {
  const ScenarioConfig sc = resolve_scenario(cfg);
  Rng rng = make_rng(sc.seed, {static_cast<std::uint64_t>(sc.id), 2});
  const double g = calibrate_gamma(sc, cfg.target, cfg.tol, cfg.n_mc, rng);
  if (cfg.json) {
    nlohmann::json j = {{"scenario", sc.id},    {"target", cfg.target}, {"n_mc", cfg.n_mc},
                        {"gamma", g},           {"configured_gamma", sc.gamma}};
    out << j.dump(2) << '\n';
  } else {
    out << "scenario,target,n_mc,gamma,configured_gamma\n"
        << sc.id << ',' << format_double(cfg.target) << ',' << cfg.n_mc << ',' << format_double(g)
        << ',' << format_double(sc.gamma) << '\n';
  }
  return 0;
}

}  // namespace ipwm::cli
