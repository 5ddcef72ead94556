#include "esq/lorden.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "esq/errors.hpp"
#include "esq/random.hpp"
#include "esq/stats.hpp"

namespace esq {

std::vector<std::string> HazardSandwich::ordering_violations() const {
  std::vector<std::string> out;
  if (const auto at = ordering_violation(lower, upper)) {
    std::ostringstream os;
    os << "lower hazard exceeds upper hazard at t=" << *at;
    out.push_back(os.str());
  }
  return out;
}

double DependenceRule::upper_weight(std::span<const double> history) const {
  switch (kind) {
    case DependenceKind::IidLower:
      return 0.0;
    case DependenceKind::IidUpper:
      return 1.0;
    case DependenceKind::Alternating:
      return history.size() % 2 == 0 ? 0.0 : 1.0;
    case DependenceKind::HistoryMixture:
      if (history.empty()) return 0.5;
      return -std::expm1(-beta * history.back());
  }
  return 0.0;
}

std::string DependenceRule::name() const {
  switch (kind) {
    case DependenceKind::IidLower:
      return "iid-lower";
    case DependenceKind::IidUpper:
      return "iid-upper";
    case DependenceKind::Alternating:
      return "alternating";
    case DependenceKind::HistoryMixture: {
      std::ostringstream os;
      os << "history-mixture(" << beta << ")";
      return os.str();
    }
  }
  return "unknown";
}

RenewalScenario::RenewalScenario(HazardSandwich sandwich, DependenceRule rule)
    : sandwich_(std::move(sandwich)), rule_(rule) {
  const auto bad = sandwich_.ordering_violations();
  if (!bad.empty()) throw ScenarioViolation("renewal scenario: " + bad.front());
  if (rule_.kind == DependenceKind::HistoryMixture && !(rule_.beta >= 0.0)) {
    throw std::invalid_argument("history-mixture: beta must be >= 0");
  }
}

HazardSpec RenewalScenario::next_hazard(std::span<const double> history) const {
  const double w = rule_.upper_weight(history);
  HazardSpec h = w == 0.0   ? sandwich_.lower
                 : w == 1.0 ? sandwich_.upper
                            : blend(sandwich_.lower, sandwich_.upper, w);
  if (ordering_violation(sandwich_.lower, h) || ordering_violation(h, sandwich_.upper)) {
    throw ScenarioViolation("rule " + rule_.name() + " left the sandwich after " +
                            std::to_string(history.size()) + " increments");
  }
  return h;
}

double lorden_moment_bound(const HazardSandwich& sandwich, int k) {
  if (k < 2) throw std::domain_error("lorden_moment_bound: k must be >= 2");
  const double eta_km1 = moment(sandwich.lower, k - 1);
  const double eta_k = moment(sandwich.lower, k);
  const double zeta = moment(sandwich.upper, 1);
  return eta_km1 + eta_k / (k * zeta);
}

double theta0(const HazardSandwich& sandwich) { return lorden_moment_bound(sandwich, 2); }

namespace {

// Walks one renewal path and reports the state at each requested time.
template <class Visit>
void walk_path(const RenewalScenario& scenario, std::span<const double> times,
               std::uint64_t seed, Visit&& visit) {
  Rng rng(seed);
  std::vector<double> history;
  double epoch = 0.0;  // last renewal epoch
  std::size_t next = 0;
  // Cache the hazard for rules that never change it.
  const bool fixed = scenario.rule().kind == DependenceKind::IidLower ||
                     scenario.rule().kind == DependenceKind::IidUpper;
  const HazardSpec fixed_hazard = scenario.next_hazard(history);
  while (next < times.size()) {
    const double xi = fixed ? sample(fixed_hazard, rng.uniform())
                            : sample(scenario.next_hazard(history), rng.uniform());
    const double following = epoch + xi;
    // Times in [epoch, following) see overshoot t - epoch.
    while (next < times.size() && times[next] < following) {
      visit(next, epoch);
      ++next;
    }
    history.push_back(xi);
    epoch = following;
  }
}

}  // namespace

RenewalPath simulate_renewal(const RenewalScenario& scenario, double t, std::uint64_t seed) {
  if (!(t >= 0.0)) throw std::domain_error("simulate_renewal: t must be >= 0");
  RenewalPath path;
  Rng rng(seed);
  std::vector<double> history;
  double epoch = 0.0;
  while (true) {
    const double xi = sample(scenario.next_hazard(history), rng.uniform());
    if (epoch + xi > t) {
      path.straddling = xi;
      break;
    }
    epoch += xi;
    history.push_back(xi);
    path.events.push_back(epoch);
  }
  path.count = path.events.size();
  path.overshoot = t - epoch;
  return path;
}

std::vector<double> overshoots_along_path(const RenewalScenario& scenario,
                                          std::span<const double> times, std::uint64_t seed) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("overshoots_along_path: times must be ascending");
  }
  std::vector<double> out(times.size());
  walk_path(scenario, times, seed, [&](std::size_t i, double epoch) {
    out[i] = times[i] - epoch;
  });
  return out;
}

LordenReport verify_lorden(const RenewalScenario& scenario, int k,
                           std::span<const double> times, std::size_t reps,
                           std::uint64_t seed) {
  if (reps < 100) throw std::invalid_argument("verify_lorden: reps must be >= 100");
  const double bound = lorden_moment_bound(scenario.sandwich(), k);

  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::vector<double>> powers(sorted.size(), std::vector<double>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    const auto b = overshoots_along_path(scenario, sorted, stream_seed(seed, r));
    for (std::size_t i = 0; i < sorted.size(); ++i) powers[i][r] = std::pow(b[i], k - 1);
  }

  LordenReport report;
  report.k = k;
  report.rule = scenario.rule().name();
  report.pass = true;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Summary s = summarize(powers[i]);
    const Interval ci = normal_ci(s, 0.99);
    LordenPoint p;
    p.t = sorted[i];
    p.mean = s.mean;
    p.ci_lo = ci.lo;
    p.ci_hi = ci.hi;
    p.max_observation = s.max;
    p.bound = bound;
    p.pass = ci.lo <= bound;
    report.pass = report.pass && p.pass;
    report.points.push_back(p);
  }
  return report;
}

}  // namespace esq
