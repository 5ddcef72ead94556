#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "esq/hazard.hpp"

namespace esq {

// Hazard bounds for renewal increments. `lower` (the slow hazard) induces the
// dominating distribution whose moments enter the bound; `upper` (the fast
// hazard) induces the distribution whose mean enters the denominator.
struct HazardSandwich {
  HazardSpec lower;
  HazardSpec upper;

  // Empty when lower <= upper pointwise (rates and atom weights).
  std::vector<std::string> ordering_violations() const;
};

enum class DependenceKind { IidLower, IidUpper, Alternating, HistoryMixture };

// Closed catalogue of rules choosing the hazard of the next increment from
// the increments drawn so far. Every rule returns a pointwise convex
// combination of lower and upper, which stays inside the sandwich.
struct DependenceRule {
  DependenceKind kind = DependenceKind::IidLower;
  // HistoryMixture: weight on `upper` is 1 - exp(-beta * previous increment);
  // the first increment uses weight 1/2.
  double beta = 1.0;

  static DependenceRule iid_lower() { return {DependenceKind::IidLower, 0.0}; }
  static DependenceRule iid_upper() { return {DependenceKind::IidUpper, 0.0}; }
  static DependenceRule alternating() { return {DependenceKind::Alternating, 0.0}; }
  static DependenceRule history_mixture(double beta) {
    return {DependenceKind::HistoryMixture, beta};
  }

  // Weight on `upper` for the next increment.
  double upper_weight(std::span<const double> history) const;
  std::string name() const;
};

class RenewalScenario {
 public:
  // Throws ScenarioViolation if the sandwich is not ordered.
  RenewalScenario(HazardSandwich sandwich, DependenceRule rule);

  const HazardSandwich& sandwich() const { return sandwich_; }
  const DependenceRule& rule() const { return rule_; }

  // Hazard of the next increment; throws ScenarioViolation if it leaves the
  // sandwich.
  HazardSpec next_hazard(std::span<const double> history) const;

 private:
  HazardSandwich sandwich_;
  DependenceRule rule_;
};

// E eta^{k-1} + E eta^k / (k E zeta) with eta ~ lower and zeta ~ upper:
// a bound on sup_t E b_t^{k-1} for the backward renewal time.
double lorden_moment_bound(const HazardSandwich& sandwich, int k);
// The k = 2 case: E eta + E eta^2 / (2 E zeta).
double theta0(const HazardSandwich& sandwich);

struct RenewalPath {
  std::size_t count = 0;         // N_t
  double overshoot = 0.0;        // b_t
  std::vector<double> events;    // renewal epochs <= t
  double straddling = 0.0;       // the increment covering t
};

RenewalPath simulate_renewal(const RenewalScenario& scenario, double t, std::uint64_t seed);

// b_t at each (ascending) time of `times`, all read from one sample path.
std::vector<double> overshoots_along_path(const RenewalScenario& scenario,
                                          std::span<const double> times,
                                          std::uint64_t seed);

struct LordenPoint {
  double t = 0.0;
  double mean = 0.0;      // empirical E b_t^{k-1}
  double ci_lo = 0.0;     // 99% normal interval
  double ci_hi = 0.0;
  double max_observation = 0.0;
  double bound = 0.0;
  bool pass = false;      // ci_lo <= bound
};

struct LordenReport {
  int k = 2;
  std::string rule;
  std::vector<LordenPoint> points;
  bool pass = false;
};

LordenReport verify_lorden(const RenewalScenario& scenario, int k,
                           std::span<const double> times, std::size_t reps,
                           std::uint64_t seed);

}  // namespace esq
