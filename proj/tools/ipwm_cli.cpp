#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ipwm/cli.hpp"

int main(int argc, char** argv) {
  ipwm::cli::RunConfig cfg;
  std::string out_path;
  std::string covariates;
  std::uint64_t seed = 0;
  int nsim = 0;

  CLI::App app{"Marginal causal odds ratios under confounding and misclassification"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* c) {
    c->add_option("--out", out_path, "Write the report to this file instead of stdout");
    c->add_flag("--json", cfg.json, "JSON output");
  };
  auto estimation = [&](CLI::App* c) {
    c->add_option("--methods", cfg.methods, "Comma-separated methods (Crude,PS,CCA,GP,IPWM) or all");
    c->add_option("--s", cfg.s, "Shrinkage constant")->check(CLI::PositiveNumber);
    c->add_option("--level", cfg.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
    c->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  };

  auto* example = app.add_subcommand("example", "Reinfarction example odds ratios");
  common(example);
  example->add_option("--s", cfg.s, "Shrinkage constant")->check(CLI::PositiveNumber);

  auto* estimate = app.add_subcommand("estimate", "Estimate odds ratios from a CSV file");
  common(estimate);
  estimation(estimate);
  estimate->add_option("--input", cfg.input, "Input CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--formulas-file", cfg.formulas_file, "Model formulas, one 'role = formula' per line")
      ->check(CLI::ExistingFile);
  estimate->add_flag("--saturated", cfg.saturated, "Saturated models in the single covariate");
  estimate->add_option("--boot", cfg.boot, "Bootstrap replicates (0 = none)")->check(CLI::NonNegativeNumber);
  estimate->add_option("--seed", seed, "Bootstrap seed");
  estimate->add_option("--weights-out", cfg.weights_out, "Write IPWM weights to this CSV");
  estimate->add_option("--z-col", cfg.schema.z, "Surrogate outcome column");
  estimate->add_option("--b-col", cfg.schema.b, "Surrogate exposure column");
  estimate->add_option("--y-col", cfg.schema.y, "Validated outcome column");
  estimate->add_option("--a-col", cfg.schema.a, "Validated exposure column");
  estimate->add_option("--ry-col", cfg.schema.r_y, "Outcome validation indicator column ('' = infer)");
  estimate->add_option("--ra-col", cfg.schema.r_a, "Exposure validation indicator column ('' = infer)");
  estimate->add_option("--weight-col", cfg.schema.weight, "Frequency weight column");
  estimate->add_option("--covariates", covariates, "Comma-separated covariate columns (default: all others)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study of one scenario");
  common(simulate);
  estimation(simulate);
  simulate->add_option("--scenario", cfg.scenario, "Built-in scenario (1..36 or scenario-N)");
  simulate->add_option("--config", cfg.config_file, "Scenario JSON file")->check(CLI::ExistingFile);
  simulate->add_option("--nsim", nsim, "Simulation replicates")->check(CLI::PositiveNumber);
  simulate->add_option("--boot", cfg.boot, "Bootstrap replicates per simulated dataset")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--replicates-out", cfg.replicates_out, "Write per-replicate estimates to this CSV");
  simulate->add_flag("--progress", cfg.progress, "Report progress on stderr");

  auto* expected = app.add_subcommand("expected-counts", "Expected counts of the reinfarction example");
  common(expected);

  auto* calibrate = app.add_subcommand("calibrate-gamma", "Solve for the exposure coefficient of a scenario");
  common(calibrate);
  calibrate->add_option("--scenario", cfg.scenario, "Built-in scenario (1..36 or scenario-N)");
  calibrate->add_option("--config", cfg.config_file, "Scenario JSON file")->check(CLI::ExistingFile);
  calibrate->add_option("--target", cfg.target, "Target marginal log odds ratio");
  calibrate->add_option("--tol", cfg.tol, "Tolerance on the log odds ratio")->check(CLI::PositiveNumber);
  calibrate->add_option("--n-mc", cfg.n_mc, "Monte Carlo sample size")->check(CLI::Range(10000, 100000000));
  calibrate->add_option("--seed", seed, "Master seed");

  CLI11_PARSE(app, argc, argv);

  for (auto* c : {estimate, simulate, calibrate})
    if (c->parsed() && c->count("--seed")) cfg.seed = seed;
  if (simulate->parsed() && simulate->count("--nsim")) cfg.nsim = nsim;
  if (!covariates.empty())
    for (const auto& c : ipwm::detail::split(covariates, ','))
      if (!ipwm::detail::trim(c).empty()) cfg.schema.covariates.push_back(ipwm::detail::trim(c));

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return 2;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;

  try {
    if (example->parsed()) return ipwm::cli::cmd_example(cfg, out);
    if (estimate->parsed()) return ipwm::cli::cmd_estimate(cfg, out, std::cerr);
    if (simulate->parsed()) return ipwm::cli::cmd_simulate(cfg, out, std::cerr);
    if (expected->parsed()) return ipwm::cli::cmd_expected_counts(cfg, out);
    if (calibrate->parsed()) return ipwm::cli::cmd_calibrate_gamma(cfg, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
