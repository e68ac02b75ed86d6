#pragma once

// Scenario configurations as JSON. A file may name a built-in scenario with
// "base": <id> and override any field; fields absent from the file keep the
// base (or default) values. Unknown keys are rejected.

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "ipwm/core.hpp"
#include "ipwm/simulation.hpp"

namespace ipwm {

inline nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["name"] = c.name;
  j["n"] = c.n;
  j["exposure_misclassification"] = c.exposure_misclassification;
  j["mu0"] = c.mu0;
  j["eta0"] = c.eta0;
  j["alpha0"] = c.alpha0;
  j["alpha"] = c.alpha;
  j["alpha11"] = c.alpha11;
  j["beta0"] = c.beta0;
  j["beta"] = c.beta;
  j["beta11"] = c.beta11;
  j["gamma"] = c.gamma;
  j["xi0"] = c.xi0;
  j["xi1"] = c.xi1;
  j["xi2"] = c.xi2;
  j["xi3"] = c.xi3;
  j["correlations"] = nlohmann::json::array();
  for (const auto& p : c.correlations) j["correlations"].push_back({{"i", p.i}, {"j", p.j}, {"rho", p.rho}});
  j["dichotomised"] = c.dichotomised;
  j["nsim"] = c.nsim;
  j["boot_b"] = c.boot_b;
  j["seed"] = c.seed;
  j["target_logor"] = c.target_logor;
  return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario JSON must be an object");
  static const std::set<std::string> known = {
      "base",  "id",     "name",    "n",     "exposure_misclassification", "mu0",   "eta0",
      "alpha0", "alpha", "alpha11", "beta0", "beta",  "beta11",  "gamma",  "xi0",
      "xi1",   "xi2",    "xi3",     "correlations", "dichotomised", "nsim", "boot_b",
      "seed",  "target_logor"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown scenario field '" + k + "'");
  try {
    ScenarioConfig c = j.contains("base") ? scenario(j.at("base").get<int>()) : ScenarioConfig{};
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("id", c.id);
    opt("name", c.name);
    opt("n", c.n);
    opt("exposure_misclassification", c.exposure_misclassification);
    opt("mu0", c.mu0);
    opt("eta0", c.eta0);
    opt("alpha0", c.alpha0);
    opt("alpha", c.alpha);
    opt("alpha11", c.alpha11);
    opt("beta0", c.beta0);
    opt("beta", c.beta);
    opt("beta11", c.beta11);
    opt("gamma", c.gamma);
    opt("xi0", c.xi0);
    opt("xi1", c.xi1);
    opt("xi2", c.xi2);
    opt("xi3", c.xi3);
    if (j.contains("correlations")) {
      c.correlations.clear();
      for (const auto& p : j.at("correlations"))
        c.correlations.push_back({p.at("i").get<int>(), p.at("j").get<int>(), p.at("rho").get<double>()});
    }
    opt("dichotomised", c.dichotomised);
    opt("nsim", c.nsim);
    opt("boot_b", c.boot_b);
    opt("seed", c.seed);
    opt("target_logor", c.target_logor);
    if (c.name.empty()) c.name = "scenario-" + std::to_string(c.id);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario JSON: ") + e.what());
  }
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace ipwm
