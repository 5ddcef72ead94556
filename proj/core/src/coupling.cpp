#include "esq/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "esq/errors.hpp"
#include "esq/stats.hpp"

namespace esq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Likelihood of x under spec, with respect to counting measure at atom
// points of either law and Lebesgue measure elsewhere.
double likelihood(const HazardSpec& spec, double x, bool atom_point) {
  return atom_point ? atom_mass(spec, x) : density(spec, x);
}

bool is_atom(const HazardSpec& a, const HazardSpec& b, double x) {
  return a.atom_weight_at(x) > 0.0 || b.atom_weight_at(x) > 0.0;
}

}  // namespace

CoupledDraw coupled_draw(const HazardSpec& fa, const HazardSpec& fb, Rng& rng) {
  CoupledDraw out;
  out.a = sample(fa, rng.uniform());
  const bool atom_a = is_atom(fa, fb, out.a);
  const double pa = likelihood(fa, out.a, atom_a);
  const double pb = likelihood(fb, out.a, atom_a);
  if (pa <= 0.0 || rng.uniform() * pa <= pb) {
    out.b = out.a;
    out.coupled = true;
    return out;
  }
  // The excess has mass 1 - overlap > 0 here; the iteration cap only guards
  // against a numerically vanishing excess.
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double y = sample(fb, rng.uniform());
    const bool atom_y = is_atom(fa, fb, y);
    const double qb = likelihood(fb, y, atom_y);
    const double qa = likelihood(fa, y, atom_y);
    if (rng.uniform() * qb > qa) {
      out.b = y;
      return out;
    }
  }
  out.b = sample(fb, rng.uniform());
  return out;
}

std::vector<CoupledDraw> coupled_draws(const HazardSpec& fa, const HazardSpec& fb,
                                       std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CoupledDraw> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(coupled_draw(fa, fb, rng));
  return out;
}

double pi0(const StandardSystem& dominating) { return std::exp(-rho(dominating)); }

double pi1(const HazardSpec& lambda0, double theta) {
  if (!(theta >= 0.0)) throw std::domain_error("pi1: theta must be >= 0");
  if (theta == 0.0) return 1.0;
  auto value = [&lambda0](double alpha) {
    return std::clamp(overlap(residual(lambda0, alpha), lambda0), 0.0, 1.0);
  };
  constexpr int kPoints = 64;
  double best_alpha = 0.0;
  double best = value(0.0);
  for (int j = 1; j < kPoints; ++j) {
    const double alpha = theta * j / (kPoints - 1);
    const double v = value(alpha);
    if (v < best) {
      best = v;
      best_alpha = alpha;
    }
  }
  double h = theta / (kPoints - 1);
  for (int round = 0; round < 2; ++round) {
    h /= 2.0;
    const double centre = best_alpha;
    for (double alpha : {centre - h, centre + h}) {
      if (alpha < 0.0 || alpha > theta) continue;
      const double v = value(alpha);
      if (v < best) {
        best = v;
        best_alpha = alpha;
      }
    }
  }
  return best;
}

SuccessProbability success_probability(const StandardSystem& dominating,
                                       const HazardSpec& lambda0,
                                       const HazardSandwich& sandwich,
                                       std::optional<double> theta) {
  SuccessProbability out;
  out.pi0 = pi0(dominating);
  out.theta0 = theta0(sandwich);
  auto evaluate = [&](double th) {
    const double p1 = pi1(lambda0, th);
    return std::pair{out.pi0 * (1.0 - out.theta0 / th) * p1, p1};
  };

  if (theta) {
    out.theta = *theta;
    if (!(*theta > out.theta0)) {
      out.diagnostic = "theta must exceed theta0";
      return out;
    }
    std::tie(out.pi, out.pi1) = evaluate(*theta);
    return out;
  }

  constexpr int kGrid = 48;
  std::vector<double> grid;
  for (int j = 1; j <= kGrid; ++j) grid.push_back(out.theta0 * std::pow(100.0, double(j) / kGrid));
  grid.push_back(2.0 * out.theta0);
  std::sort(grid.begin(), grid.end());
  std::vector<double> values;
  for (double th : grid) values.push_back(evaluate(th).first);
  const auto best =
      static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  double best_theta = grid[best];
  double best_value = values[best];

  // Golden section on the bracketing grid cells.
  double lo = best > 0 ? grid[best - 1] : out.theta0 * (1.0 + 1e-9);
  double hi = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  double fc = evaluate(c).first;
  double fd = evaluate(d).first;
  for (int iter = 0; iter < 30 && hi - lo > 1e-6 * hi; ++iter) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = evaluate(c).first;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = evaluate(d).first;
    }
  }
  for (auto [th, v] : {std::pair{c, fc}, std::pair{d, fd}}) {
    if (v > best_value) {
      best_value = v;
      best_theta = th;
    }
  }
  out.theta = best_theta;
  std::tie(out.pi, out.pi1) = evaluate(best_theta);
  if (!(out.pi > 0.0)) out.diagnostic = "no theta gives a positive success probability";
  return out;
}

SeriesConstants k_series(int k, double pi) {
  if (k < 1) throw std::domain_error("k_series: k must be >= 1");
  if (!(pi > 0.0)) throw DivergenceError("k_series: pi must be positive");
  if (pi > 1.0) throw std::domain_error("k_series: pi must be <= 1");
  if (pi == 1.0) return {1.0, 1.0};
  const double x = 1.0 - pi;
  return {polylog_sum(x, k - 1) / x, polylog_sum(x, k) / x};
}

double regen_moment_bound(const IntensityModel& model, int k) {
  if (k < 1) throw std::domain_error("regen_moment_bound: k must be >= 1");
  const double idle = std::tgamma(k + 1.0) / std::pow(model.lambda_inf, k);
  return std::pow(2.0, k - 1) * (idle + busy_moment_bound(model.dominating_system(), k));
}

double tau_moment_bound(int k, double pi, double er0_k, double er1_k) {
  if (!(pi > 0.0)) throw NoCouplingError("tau_moment_bound: success probability is zero");
  const SeriesConstants s = k_series(k, pi);
  return s.K0 * er0_k + s.K * er1_k;
}

std::string to_string(Provenance p) {
  return p == Provenance::Analytic ? "analytic" : "empirical+3se";
}

RegenMoment first_regeneration_moment(const IntensityModel& model, const SystemState& initial,
                                      int k, std::size_t reps, std::uint64_t seed,
                                      double max_time) {
  if (reps < 2) throw std::invalid_argument("first_regeneration_moment: reps must be >= 2");
  std::vector<double> values(reps);
  std::vector<Event> tick;
  for (std::size_t r = 0; r < reps; ++r) {
    Simulation sim(model, initial, stream_seed(seed, r));
    double hit = kInf;
    while (hit == kInf) {
      tick.clear();
      if (!sim.advance(max_time, tick) && tick.empty()) break;
      for (const Event& e : tick) {
        if (e.kind == EventKind::Arrival && e.n_after == 1) {
          hit = e.time;
          break;
        }
      }
    }
    if (hit == kInf) {
      throw std::runtime_error("first_regeneration_moment: no regeneration before max_time");
    }
    values[r] = std::pow(hit, k);
  }
  const Summary s = summarize(values);
  return {s.mean, s.standard_error(), reps};
}

HazardSandwich arrival_sandwich(const IntensityModel& model) {
  return {model.lambda0, HazardSpec::exponential(model.lambda_max)};
}

CouplingPlan build_plan(const IntensityModel& model, const PlanOptions& options) {
  CouplingPlan plan;
  plan.k = options.k;
  const StandardSystem dominating = model.dominating_system();
  plan.rho = rho(dominating);
  const SuccessProbability sp =
      success_probability(dominating, model.lambda0, arrival_sandwich(model), options.theta);
  plan.pi0 = sp.pi0;
  plan.pi1 = sp.pi1;
  plan.pi = sp.pi;
  plan.theta = sp.theta;
  plan.theta0 = sp.theta0;
  if (!(plan.pi > 0.0)) throw NoCouplingError("build_plan: " + sp.diagnostic);
  const SeriesConstants s = k_series(plan.k, plan.pi);
  plan.K0 = s.K0;
  plan.K = s.K;
  plan.er1_k = regen_moment_bound(model, plan.k);

  if (options.er0_k) {
    plan.er0_k = *options.er0_k;
    plan.er0_provenance = Provenance::Analytic;
  } else {
    plan.er0_provenance = Provenance::Empirical;
    plan.er0_reps = options.er0_reps;
    for (std::size_t i = 0; i < options.er0_states.size(); ++i) {
      const RegenMoment m = first_regeneration_moment(model, options.er0_states[i], plan.k,
                                                      options.er0_reps,
                                                      stream_seed(options.seed, i));
      const double inflated = m.mean + 3.0 * m.standard_error;
      if (inflated > plan.er0_k) {
        plan.er0_k = inflated;
        plan.er0_standard_error = m.standard_error;
      }
    }
  }
  plan.bound_constant = tau_moment_bound(plan.k, plan.pi, plan.er0_k, plan.er1_k);
  return plan;
}

double tv_bound(const CouplingPlan& plan, double t) {
  if (!(t > 0.0)) throw std::domain_error("tv_bound: t must be positive");
  return std::min(2.0, 2.0 * plan.bound_constant / std::pow(t, plan.k));
}

CouplingRun simulate_coupling_time(const IntensityModel& model, const SystemState& init_a,
                                   const SystemState& init_b, std::uint64_t seed,
                                   double max_time) {
  CouplingRun run;
  if (init_a == init_b) return run;
  Simulation a(model, init_a, stream_seed(seed, 0));
  Simulation b(model, init_b, stream_seed(seed, 1));
  Rng rng(stream_seed(seed, 2));
  const HazardSpec idle = model.idle_arrival_hazard();
  std::vector<Event> scratch;

  auto drain = [&](Simulation& sim) {
    while (sim.n() > 0 && sim.time() < max_time) {
      scratch.clear();
      sim.advance(max_time, scratch);
    }
  };

  while (true) {
    drain(a);
    drain(b);
    if (a.time() >= max_time || b.time() >= max_time) {
      run.tau = kInf;
      return run;
    }
    if (a.time() != b.time()) {
      Simulation& early = a.time() < b.time() ? a : b;
      const double s = std::max(a.time(), b.time());
      scratch.clear();
      early.run_until(s, scratch);
      if (early.n() > 0) continue;
    }
    // Both empty at the same instant.
    const double s = a.time();
    ++run.attempts;
    const CoupledDraw d =
        coupled_draw(residual(idle, a.state().x0), residual(idle, b.state().x0), rng);
    if (d.coupled) {
      run.tau = s + d.a;
      return run;
    }
    a.force_idle_arrival(s + d.a);
    b.force_idle_arrival(s + d.b);
  }
}

}  // namespace esq
