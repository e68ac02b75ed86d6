// A small Monte Carlo study: one built-in scenario, few replicates, and the
// true marginal log odds ratio for comparison.
//
//   simulate_scenario [scenario-id] [nsim] [boot_b]

#include <cstdlib>
#include <iostream>

#include "ipwm/ipwm.hpp"

int main(int argc, char** argv) {
  using namespace ipwm;

  const int id = argc > 1 ? std::atoi(argv[1]) : 7;
  ScenarioConfig cfg = scenario(id);
  cfg.nsim = argc > 2 ? std::atoi(argv[2]) : 20;
  cfg.boot_b = argc > 3 ? std::atoi(argv[3]) : 20;

  Rng rng = make_rng(cfg.seed, {999});
  std::cout << cfg.name << ": n = " << cfg.n << ", gamma = " << cfg.gamma
            << ", marginal log OR = " << true_marginal_logor(cfg, cfg.gamma, 200000, rng) << "\n\n";

  StudyOptions opt;
  opt.progress = [](std::size_t done, std::size_t total) {
    std::cerr << "\r" << done << '/' << total << std::flush;
    if (done == total) std::cerr << '\n';
  };
  const std::vector<Method> methods(std::begin(kAllMethods), std::end(kAllMethods));
  const StudyResult res = run_study(cfg, methods, opt);
  write_metrics_csv(std::cout, res.metrics);
  return 0;
}
