#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "esq/lorden.hpp"
#include "esq/simulator.hpp"

namespace esq::cli {

struct NamedRenewal {
  std::string name;
  RenewalScenario scenario;
};

struct Experiment {
  double horizon = 100.0;              // simulate
  std::size_t reps = 2000;             // Monte Carlo replications per point
  std::size_t cycles = 10000;          // regeneration cycles
  std::vector<double> t_grid;          // bound curve / empirical TV times
  std::vector<double> lorden_times{1.0, 5.0, 20.0, 100.0};
  std::vector<double> poisson_times{0.5, 1.0, 2.0};
  double grid_step = 1e-3;             // busy_cdf
  double x_max = 40.0;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  std::size_t er0_reps = 2000;
  std::size_t validate_samples = 10000;
  std::size_t pair_events = 10000;
  std::vector<SystemState> initial_states{SystemState::empty()};
};

struct Scenario {
  std::string name;
  IntensityModel model;
  int k = 2;
  std::vector<NamedRenewal> renewals;
  Experiment experiment;
};

// Throws esq::ParseError on anything malformed.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace esq::cli
