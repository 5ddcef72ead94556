#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esq/hazard.hpp"
#include "esq/lorden.hpp"
#include "esq/mginf.hpp"
#include "esq/random.hpp"
#include "esq/simulator.hpp"

namespace esq {

struct CoupledDraw {
  double a = 0.0;
  double b = 0.0;
  bool coupled = false;
};

// Maximal coupling of two lifetimes: a ~ fa, b ~ fb and P{a = b} equals
// overlap(fa, fb). Draws a from fa, keeps it for b with probability
// min(1, f_b(a) / f_a(a)), and otherwise draws b from the normalized excess
// (f_b - f_a)^+ by rejection.
CoupledDraw coupled_draw(const HazardSpec& fa, const HazardSpec& fb, Rng& rng);
std::vector<CoupledDraw> coupled_draws(const HazardSpec& fa, const HazardSpec& fb,
                                       std::size_t count, std::uint64_t seed);

// exp(-rho): probability that the dominating system is empty, uniformly in t.
double pi0(const StandardSystem& dominating);

// inf over alpha in [0, theta] of overlap(residual(lambda0, alpha), lambda0).
double pi1(const HazardSpec& lambda0, double theta);

struct SuccessProbability {
  double pi = 0.0;
  double theta = 0.0;
  double theta0 = 0.0;
  double pi0 = 0.0;
  double pi1 = 0.0;
  std::string diagnostic;  // set when pi == 0
};

// pi(theta) = pi0 (1 - theta0 / theta) pi1(theta). Without `theta` the value
// is maximized over a log grid on (theta0, 100 theta0] with golden-section
// refinement around the best grid point.
SuccessProbability success_probability(const StandardSystem& dominating,
                                       const HazardSpec& lambda0,
                                       const HazardSandwich& sandwich,
                                       std::optional<double> theta = std::nullopt);

struct SeriesConstants {
  double K0 = 0.0;
  double K = 0.0;
};

// K0 = sum_{i>=0} (1-pi)^i (i+1)^{k-1}, K = sum_{i>=0} (1-pi)^i (i+1)^k.
SeriesConstants k_series(int k, double pi);

// 2^{k-1} (k! / lambda_inf^k + busy_moment_bound(dominating, k)).
double regen_moment_bound(const IntensityModel& model, int k);

// K0 er0_k + K er1_k; throws NoCouplingError when pi <= 0.
double tau_moment_bound(int k, double pi, double er0_k, double er1_k);

enum class Provenance { Analytic, Empirical };
std::string to_string(Provenance p);  // "analytic" | "empirical+3se"

struct RegenMoment {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
};

// E R0^k where R0 is the first arrival into an empty system, started from
// `initial`.
RegenMoment first_regeneration_moment(const IntensityModel& model, const SystemState& initial,
                                      int k, std::size_t reps, std::uint64_t seed,
                                      double max_time = 1e7);

struct CouplingPlan {
  int k = 2;
  double rho = 0.0;
  double pi0 = 0.0;
  double pi1 = 0.0;
  double pi = 0.0;
  double theta = 0.0;
  double theta0 = 0.0;
  double K0 = 0.0;
  double K = 0.0;
  double er0_k = 0.0;
  double er1_k = 0.0;
  Provenance er0_provenance = Provenance::Analytic;
  double er0_standard_error = 0.0;
  std::size_t er0_reps = 0;
  double bound_constant = 0.0;  // K0 er0_k + K er1_k
};

struct PlanOptions {
  int k = 2;
  std::optional<double> theta;
  // A known bound on E R0^k. When absent er0_k is estimated by simulation
  // from each of `er0_states` (mean + 3 standard errors, maximized).
  std::optional<double> er0_k;
  std::vector<SystemState> er0_states{SystemState::empty()};
  std::size_t er0_reps = 10'000;
  std::uint64_t seed = 1;
};

// The idle-time sandwich used for theta0: slow arrivals lambda0, fast
// arrivals at the constant rate lambda_max.
HazardSandwich arrival_sandwich(const IntensityModel& model);

// Throws NoCouplingError when the optimized pi is zero.
CouplingPlan build_plan(const IntensityModel& model, const PlanOptions& options);

// min(2, 2 K / t^k).
double tv_bound(const CouplingPlan& plan, double t);

struct CouplingRun {
  double tau = 0.0;  // infinity when max_time was reached first
  std::size_t attempts = 0;
};

// Runs two copies from init_a and init_b independently; whenever both are
// empty at once, their next arrivals are drawn by coupled_draw on the
// residual idle hazards. tau is the first common arrival.
CouplingRun simulate_coupling_time(const IntensityModel& model, const SystemState& init_a,
                                   const SystemState& init_b, std::uint64_t seed,
                                   double max_time = 1e7);

}  // namespace esq
