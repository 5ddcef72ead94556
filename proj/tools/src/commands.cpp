#include "esq/cli/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "esq/cli/scenario.hpp"
#include "esq/coupling.hpp"
#include "esq/errors.hpp"
#include "esq/io.hpp"
#include "esq/mginf.hpp"
#include "esq/stats.hpp"

namespace esq::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<double> tol;
  std::string out = ".";
};

// Sub-stream tags; each task draws from its own derived seed.
enum Stream : std::uint64_t {
  kPoisson = 1,
  kRegenStandard,
  kRegenModel,
  kLorden,
  kPair,
  kPlan,
  kTv,
  kValidate,
  kEvents,
};

std::uint64_t seed_for(const Scenario& sc, Stream s) { return stream_seed(sc.experiment.seed, s); }

json num(double v, const char* provenance) { return {{"value", v}, {"provenance", provenance}}; }
json analytic(double v) { return num(v, "analytic"); }
json empirical(double v) { return num(v, "empirical"); }
json input(double v) { return num(v, "input"); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

struct Check {
  std::string name;
  bool pass = false;
  json values = json::object();
  std::string message;
};

json to_json(const Check& c) {
  json j{{"name", c.name}, {"pass", c.pass}, {"values", c.values}};
  if (!c.message.empty()) j["message"] = c.message;
  return j;
}

// Runs `body`; an exception becomes a failed check that names the error.
Check guarded(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  c.name = name;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.message = e.what();
  }
  return c;
}

IntensityModel dominating_model(const IntensityModel& m) {
  return standard_model(m.lambda_max, m.phi);
}

std::vector<double> tv_times(const Scenario& sc, const CouplingPlan& plan) {
  if (!sc.experiment.t_grid.empty()) return sc.experiment.t_grid;
  // Where the bound first reaches 1, then four half-octaves beyond.
  const double t_star = std::pow(2.0 * plan.bound_constant, 1.0 / plan.k);
  std::vector<double> out;
  for (int j = 1; j <= 4; ++j) out.push_back(t_star * std::pow(2.0, 0.5 * j));
  return out;
}

CouplingPlan make_plan(const Scenario& sc) {
  PlanOptions opt;
  opt.k = sc.k;
  opt.er0_states = sc.experiment.initial_states;
  opt.er0_reps = sc.experiment.er0_reps;
  opt.seed = seed_for(sc, kPlan);
  return build_plan(sc.model, opt);
}

const SystemState& init_a(const Scenario& sc) { return sc.experiment.initial_states.front(); }
const SystemState& init_b(const Scenario& sc) { return sc.experiment.initial_states.back(); }

Check check_validate(const Scenario& sc) {
  return guarded("validate_model", [&](Check& c) {
    const auto issues =
        validate_model(sc.model, sc.experiment.validate_samples, seed_for(sc, kValidate));
    c.pass = issues.empty();
    c.values["samples"] = input(static_cast<double>(sc.experiment.validate_samples));
    c.values["violations"] = empirical(static_cast<double>(issues.size()));
    if (!issues.empty()) c.message = issues.front();
  });
}

Check check_poisson(const Scenario& sc) {
  return guarded("poisson_law", [&](Check& c) {
    const IntensityModel d = dominating_model(sc.model);
    const StandardSystem sys = d.dominating_system();
    const std::size_t reps = sc.experiment.reps;
    c.pass = true;
    c.values["points"] = json::array();
    const auto& times = sc.experiment.poisson_times;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double t = times[ti];
      const double g = integrated_tail(sys, t);
      const auto cells = static_cast<std::size_t>(std::ceil(g + 10.0 * std::sqrt(g) + 10.0));
      std::vector<std::size_t> counts(cells + 1, 0);
      const std::uint64_t base = stream_seed(seed_for(sc, kPoisson), ti);
      std::vector<Event> scratch;
      for (std::size_t r = 0; r < reps; ++r) {
        Simulation sim(d, SystemState::empty(), stream_seed(base, r));
        scratch.clear();
        sim.run_until(t, scratch);
        ++counts[std::min(sim.n(), cells)];
      }
      std::vector<double> p(cells + 1);
      double acc = 0.0;
      for (std::size_t k = 0; k < cells; ++k) {
        p[k] = transient_pmf(sys, t, static_cast<int>(k));
        acc += p[k];
      }
      p[cells] = std::max(0.0, 1.0 - acc);
      const ChiSquareResult chi = chi_square_gof(counts, p);
      const bool ok = chi.p_value > 0.01;
      c.pass = c.pass && ok;
      c.values["points"].push_back({{"t", input(t)},
                                    {"chi2", empirical(chi.statistic)},
                                    {"dof", empirical(chi.dof)},
                                    {"p_value", empirical(chi.p_value)},
                                    {"threshold", analytic(0.01)}});
      if (!ok) c.message = "chi-square p-value " + fmt(chi.p_value) + " at t=" + fmt(t);
    }
    c.values["reps"] = input(static_cast<double>(reps));
  });
}

struct RegenData {
  RegenReport standard;
  RegenReport model;
};

Check check_busy_mean(const Scenario& sc, const RegenReport& regen) {
  return guarded("busy_mean", [&](Check& c) {
    const StandardSystem sys = sc.model.dominating_system();
    const double exact = busy_mean(sys);
    const MomentEstimate& m = regen.zeta_moments.at(0);
    const double z = normal_critical(0.999);
    c.pass = std::abs(m.mean - exact) <= z * m.standard_error;
    c.values = {{"exact", analytic(exact)},
                {"mean", empirical(m.mean)},
                {"standard_error", empirical(m.standard_error)},
                {"cycles", input(static_cast<double>(regen.samples.size()))}};
    if (!c.pass) c.message = "simulated busy mean " + fmt(m.mean) + " vs " + fmt(exact);
  });
}

Check check_busy_cdf(const Scenario& sc, const RegenReport& regen, const BusyCdfTable& table) {
  return guarded("busy_cdf", [&](Check& c) {
    // The busy period inherits the service atoms, and linear interpolation
    // smears each jump over the step before it. Hold the pre-jump value on
    // that step and snap samples (which carry event-clock roundoff) onto the
    // atom itself.
    const double h = table.step;
    const auto& atoms = sc.model.phi.atoms();
    auto atom_near = [&](double x) -> const Atom* {
      for (const auto& a : atoms) {
        if (std::abs(x - a.location) <= 1e-9 * std::max(1.0, a.location)) return &a;
      }
      return nullptr;
    };
    auto reference = [&](double x) {
      for (const auto& a : atoms) {
        if (x >= a.location - h && x < a.location) return table.at(a.location - h);
      }
      return table.at(x);
    };
    auto left = [&](double x) { return atom_near(x) ? table.at(x - h) : reference(x); };
    std::vector<double> zeta;
    for (const auto& s : regen.samples) {
      const Atom* a = atom_near(s.zeta);
      zeta.push_back(a ? a->location : s.zeta);
    }
    const double d = ecdf_sup_distance(zeta, reference, left);
    const double band = dkw_epsilon(zeta.size(), 0.01) + 2.0 * table.grid_error;
    c.pass = d <= band;
    c.values = {{"sup_distance", empirical(d)},
                {"band", analytic(band)},
                {"grid_error", analytic(table.grid_error)},
                {"tail_mass", analytic(table.tail_mass)},
                {"terms", analytic(static_cast<double>(table.terms))}};
    if (!c.pass) c.message = "sup distance " + fmt(d) + " exceeds " + fmt(band);
  });
}

Check check_laplace(const Scenario& sc, const BusyCdfTable& table) {
  return guarded("busy_laplace", [&](Check& c) {
    const StandardSystem sys = sc.model.dominating_system();
    const double s = 1e-5;
    const double mean_fd = (1.0 - busy_laplace(sys, s)) / s;
    const double exact = busy_mean(sys);
    const double lst = busy_laplace(sys, 1.0);
    const double grid_lst = busy_laplace_from_table(table, 1.0);
    const bool mean_ok = std::abs(mean_fd - exact) <= 0.01 * exact;
    const double lst_tol = 1e-4 + 2.0 * table.grid_error + table.tail_mass;
    const bool lst_ok = std::abs(lst - grid_lst) <= lst_tol;
    c.pass = mean_ok && lst_ok;
    c.values = {{"mean_from_transform", analytic(mean_fd)},
                {"busy_mean", analytic(exact)},
                {"transform_at_1", analytic(lst)},
                {"grid_transform_at_1", analytic(grid_lst)},
                {"transform_tolerance", analytic(lst_tol)}};
    if (!mean_ok) c.message = "transform mean " + fmt(mean_fd) + " vs " + fmt(exact);
    if (!lst_ok) c.message = "transform at 1 differs from grid by " + fmt(std::abs(lst - grid_lst));
  });
}

Check check_moment_bounds(const Scenario& sc, const RegenData& regen, const BusyCdfTable& table) {
  return guarded("busy_moment_bound", [&](Check& c) {
    const StandardSystem sys = sc.model.dominating_system();
    c.pass = true;
    c.values["points"] = json::array();
    for (int k = 1; k <= 3; ++k) {
      const double bound = busy_moment_bound(sys, k);
      const double numeric = busy_moment_numeric(table, k);
      const MomentEstimate& y = regen.standard.zeta_moments.at(k - 1);
      const MomentEstimate& x = regen.model.zeta_moments.at(k - 1);
      const MomentEstimate& idle = regen.model.sigma_moments.at(k - 1);
      const double idle_bound = std::tgamma(k + 1.0) / std::pow(sc.model.lambda_inf, k);
      const bool ok = bound >= numeric && y.ci_lo <= bound && x.ci_lo <= bound &&
                      idle.ci_lo <= idle_bound;
      c.pass = c.pass && ok;
      c.values["points"].push_back({{"k", input(k)},
                                    {"bound", analytic(bound)},
                                    {"numeric", analytic(numeric)},
                                    {"standard_ci_lo", empirical(y.ci_lo)},
                                    {"model_ci_lo", empirical(x.ci_lo)},
                                    {"idle_bound", analytic(idle_bound)},
                                    {"idle_ci_lo", empirical(idle.ci_lo)}});
      if (!ok) c.message = "moment bound violated at k=" + std::to_string(k);
    }
  });
}

std::vector<Check> check_lorden(const Scenario& sc) {
  std::vector<Check> out;
  for (std::size_t i = 0; i < sc.renewals.size(); ++i) {
    const NamedRenewal& r = sc.renewals[i];
    for (int k : {sc.k, sc.k + 1}) {
      out.push_back(guarded("lorden/" + r.name + "/k=" + std::to_string(k), [&](Check& c) {
        const LordenReport rep =
            verify_lorden(r.scenario, k, sc.experiment.lorden_times, sc.experiment.reps,
                          stream_seed(seed_for(sc, kLorden), 16 * i + static_cast<std::size_t>(k)));
        c.pass = rep.pass;
        c.values["points"] = json::array();
        for (const LordenPoint& p : rep.points) {
          c.values["points"].push_back({{"t", input(p.t)},
                                        {"mean", empirical(p.mean)},
                                        {"ci_lo", empirical(p.ci_lo)},
                                        {"bound", analytic(p.bound)}});
          if (!p.pass) c.message = "overshoot moment above bound at t=" + fmt(p.t);
        }
      }));
    }
  }
  return out;
}

Check check_domination(const Scenario& sc) {
  return guarded("domination", [&](Check& c) {
    const DominationReport rep =
        simulate_dominated_pair(sc.model, std::numeric_limits<double>::infinity(),
                                seed_for(sc, kPair), sc.experiment.pair_events);
    c.pass = rep.count_violations == 0 && rep.injection_violations == 0;
    c.values = {{"events", empirical(static_cast<double>(rep.events.size()))},
                {"count_violations", empirical(static_cast<double>(rep.count_violations))},
                {"injection_violations", empirical(static_cast<double>(rep.injection_violations))}};
    if (!rep.details.empty()) c.message = rep.details.front();
    if (!rep.busy_x.empty() && !rep.busy_y.empty()) {
      const double excess = stochastic_order_excess(rep.busy_x, rep.busy_y);
      const double band =
          dkw_epsilon(rep.busy_x.size(), 0.005) + dkw_epsilon(rep.busy_y.size(), 0.005);
      c.values["busy_order_excess"] = empirical(excess);
      c.values["busy_order_band"] = analytic(band);
      if (excess > band) {
        c.pass = false;
        c.message = "busy periods of X not below those of Y: excess " + fmt(excess);
      }
    }
  });
}

struct CurvePoint {
  double t;
  double bound;
  TvEstimate tv;
};

std::vector<CurvePoint> bound_curve(const Scenario& sc, const CouplingPlan& plan) {
  const std::vector<double> times = tv_times(sc, plan);
  const auto tv = empirical_tv(sc.model, init_a(sc), init_b(sc), times, sc.experiment.reps,
                               seed_for(sc, kTv));
  std::vector<CurvePoint> out;
  for (std::size_t i = 0; i < times.size(); ++i) out.push_back({tv[i].t, tv_bound(plan, tv[i].t), tv[i]});
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string s = "t,tv_bound,tv_empirical,tv_empirical_ci_hi\n";
  for (const auto& p : curve) {
    s += fmt(p.t) + "," + fmt(p.bound) + "," + fmt(p.tv.tv) + "," + fmt(p.tv.ci_hi) + "\n";
  }
  return s;
}

Check check_tv(const Scenario& sc, const CouplingPlan& plan, const std::vector<CurvePoint>& curve) {
  return guarded("tv_bound", [&](Check& c) {
    c.pass = true;
    c.values["bound_constant"] = num(plan.bound_constant, to_string(plan.er0_provenance).c_str());
    c.values["points"] = json::array();
    std::size_t active = 0;
    for (const auto& p : curve) {
      c.values["points"].push_back({{"t", input(p.t)},
                                    {"tv_bound", num(p.bound, to_string(plan.er0_provenance).c_str())},
                                    {"tv_empirical", empirical(p.tv.tv)},
                                    {"tv_ci_hi", empirical(p.tv.ci_hi)}});
      if (p.bound >= 1.0) continue;
      ++active;
      if (p.tv.tv > p.bound) {
        c.pass = false;
        c.message = "empirical TV " + fmt(p.tv.tv) + " above bound " + fmt(p.bound) + " at t=" + fmt(p.t);
      }
    }
    if (active == 0) {
      c.pass = false;
      c.message = "no time in the grid where the bound is below 1";
    }
  });
}

int report(const std::vector<Check>& checks, const fs::path& path, const Scenario& sc,
           const std::string& command, std::ostream& out) {
  bool pass = true;
  json j{{"scenario", sc.name}, {"command", command}, {"seed", input(static_cast<double>(sc.experiment.seed))}};
  j["checks"] = json::array();
  for (const Check& c : checks) {
    pass = pass && c.pass;
    j["checks"].push_back(to_json(c));
    out << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.pass && !c.message.empty()) out << ": " << c.message;
    out << "\n";
  }
  j["pass"] = pass;
  write_file(path, dump(j));
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_validate(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  std::vector<Check> checks{check_validate(sc)};
  // Renewal sandwiches are checked on load; report them here as well.
  for (const NamedRenewal& r : sc.renewals) {
    checks.push_back(guarded("renewal_sandwich/" + r.name, [&](Check& c) {
      const auto issues = r.scenario.sandwich().ordering_violations();
      c.pass = issues.empty();
      c.values["violations"] = analytic(static_cast<double>(issues.size()));
      if (!issues.empty()) c.message = issues.front();
    }));
  }
  return report(checks, dir / "validate_report.json", sc, "validate", out);
}

int cmd_simulate(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  const Check valid = check_validate(sc);
  if (!valid.pass) return report({valid}, dir / "simulate_report.json", sc, "simulate", out);
  const EventLog log = simulate(sc.model, sc.experiment.horizon, seed_for(sc, kEvents), init_a(sc));
  write_file(dir / "events.csv", log.to_csv());
  const RegenReport regen = sample_regenerations(sc.model, sc.experiment.cycles, seed_for(sc, kRegenModel));
  std::string csv = "cycle,sigma,zeta,r\n";
  for (std::size_t i = 0; i < regen.samples.size(); ++i) {
    const auto& s = regen.samples[i];
    csv += std::to_string(i) + "," + fmt(s.sigma) + "," + fmt(s.zeta) + "," + fmt(s.r) + "\n";
  }
  write_file(dir / "regenerations.csv", csv);
  out << "wrote " << log.events.size() << " events and " << regen.samples.size() << " cycles\n";
  return kExitOk;
}

json plan_report(const Scenario& sc, const CouplingPlan& plan) {
  const StandardSystem sys = sc.model.dominating_system();
  json j{{"scenario", sc.name}, {"seed", input(static_cast<double>(sc.experiment.seed))}};
  j["plan"] = plan_to_json(plan);
  j["busy_mean"] = analytic(busy_mean(sys));
  j["busy_moment_bound"] = json::array();
  for (int k = 1; k <= sc.k; ++k) {
    j["busy_moment_bound"].push_back({{"k", input(k)}, {"bound", analytic(busy_moment_bound(sys, k))}});
  }
  j["lorden_bound"] = json::array();
  for (const NamedRenewal& r : sc.renewals) {
    j["lorden_bound"].push_back({{"renewal", r.name},
                                 {"k", input(sc.k)},
                                 {"bound", analytic(lorden_moment_bound(r.scenario.sandwich(), sc.k))}});
  }
  return j;
}

int cmd_bounds(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  const Check valid = check_validate(sc);
  if (!valid.pass) return report({valid}, dir / "bounds_report.json", sc, "bounds", out);
  const CouplingPlan plan = make_plan(sc);
  write_file(dir / "bounds.json", dump(plan_report(sc, plan)));
  write_file(dir / "bound_curve.csv", curve_csv(bound_curve(sc, plan)));
  const BusyCdfTable table = busy_cdf(sc.model.dominating_system(), sc.experiment.grid_step,
                                      sc.experiment.x_max, sc.experiment.tol);
  write_file(dir / "busy_cdf.csv", table.to_csv());
  for (const auto& w : table.warnings) out << "warning: " << w << "\n";
  out << "K = " << fmt(plan.bound_constant) << " (er0 " << to_string(plan.er0_provenance) << ")\n";
  return kExitOk;
}

int cmd_verify(const Scenario& sc, const fs::path& dir, std::ostream& out) {
  std::vector<Check> checks{check_validate(sc)};
  if (!checks.front().pass) return report(checks, dir / "verify_report.json", sc, "verify", out);

  RegenData regen;
  regen.standard = sample_regenerations(dominating_model(sc.model), sc.experiment.cycles,
                                        seed_for(sc, kRegenStandard));
  regen.model = sample_regenerations(sc.model, sc.experiment.cycles, seed_for(sc, kRegenModel));
  const BusyCdfTable table = busy_cdf(sc.model.dominating_system(), sc.experiment.grid_step,
                                      sc.experiment.x_max, sc.experiment.tol);

  checks.push_back(check_poisson(sc));
  checks.push_back(check_busy_mean(sc, regen.standard));
  checks.push_back(check_busy_cdf(sc, regen.standard, table));
  checks.push_back(check_laplace(sc, table));
  checks.push_back(check_moment_bounds(sc, regen, table));
  for (Check& c : check_lorden(sc)) checks.push_back(std::move(c));
  checks.push_back(check_domination(sc));
  std::optional<CouplingPlan> plan;
  checks.push_back(guarded("coupling_plan", [&](Check& c) {
    plan = make_plan(sc);
    c.pass = plan->pi > 0.0 && std::isfinite(plan->bound_constant);
    c.values = {{"pi", analytic(plan->pi)}, {"K", num(plan->bound_constant, to_string(plan->er0_provenance).c_str())}};
  }));
  if (plan) {
    std::vector<CurvePoint> curve;
    Check tv = guarded("tv_bound", [&](Check&) { curve = bound_curve(sc, *plan); });
    if (tv.message.empty()) {
      write_file(dir / "bound_curve.csv", curve_csv(curve));
      tv = check_tv(sc, *plan, curve);
    }
    checks.push_back(std::move(tv));
  }
  return report(checks, dir / "verify_report.json", sc, "verify", out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Convergence-rate bounds and simulation checks for infinite-server queues", "esq"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"bounds", "analytic pipeline: coupling plan JSON, bound curve and busy-period CDF"},
      {"simulate", "event log and regeneration cycles as CSV"},
      {"verify", "cross-check every analytic bound against simulation"},
      {"validate", "audit the model against its declared bounds"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opt.scenario, "scenario JSON file")->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides the scenario)");
    sub->add_option("--reps", opt.reps, "Monte Carlo replications (overrides the scenario)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol", opt.tol, "busy-period CDF truncation tolerance")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--out", opt.out, "output directory");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "esq: " << e.what() << "\n";
    return kExitBadInput;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Scenario sc;
  try {
    sc = load_scenario(opt.scenario);
  } catch (const std::exception& e) {
    err << "esq: invalid scenario: " << e.what() << "\n";
    return kExitBadInput;
  }
  if (opt.seed) sc.experiment.seed = *opt.seed;
  if (opt.reps) {
    sc.experiment.reps = *opt.reps;
    sc.experiment.cycles = *opt.reps;
    sc.experiment.er0_reps = *opt.reps;
  }
  if (opt.tol) sc.experiment.tol = *opt.tol;

  const fs::path dir(opt.out);
  try {
    fs::create_directories(dir);
    if (command == "validate") return cmd_validate(sc, dir, out);
    if (command == "simulate") return cmd_simulate(sc, dir, out);
    if (command == "bounds") return cmd_bounds(sc, dir, out);
    return cmd_verify(sc, dir, out);
  } catch (const std::invalid_argument& e) {
    err << "esq: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "esq: " << command << " failed: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace esq::cli
