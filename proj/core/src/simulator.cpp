#include "esq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "esq/errors.hpp"
#include "esq/stats.hpp"

namespace esq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool above(double value, double bound) { return value > bound + 1e-12 * (1.0 + std::abs(bound)); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string describe_state(double time, double x0, std::span<const double> elapsed) {
  std::ostringstream os;
  os << "t=" << time << " state=(n=" << elapsed.size() << ", x0=" << x0 << "; ";
  for (std::size_t i = 0; i < elapsed.size() && i < 8; ++i) os << (i ? ", " : "") << elapsed[i];
  if (elapsed.size() > 8) os << ", ...";
  os << ")";
  return os.str();
}

const HazardSpec* rule_hazard(const ServiceRule& rule) {
  return std::visit(Overloaded{
                        [](const rules::LowerService&) -> const HazardSpec* { return nullptr; },
                        [](const rules::HazardService& r) -> const HazardSpec* { return &r.hazard; },
                        [](const rules::ScaledHazardService& r) -> const HazardSpec* {
                          return &r.hazard;
                        },
                        [](const rules::SandwichBlendService&) -> const HazardSpec* {
                          return nullptr;
                        },
                    },
                    rule);
}

const HazardSpec* rule_hazard(const ArrivalRule& rule) {
  return std::visit(Overloaded{
                        [](const rules::ConstantArrival&) -> const HazardSpec* { return nullptr; },
                        [](const rules::HazardOfX0& r) -> const HazardSpec* { return &r.hazard; },
                        [](const rules::ScaledHazardOfX0& r) -> const HazardSpec* {
                          return &r.hazard;
                        },
                    },
                    rule);
}

std::vector<MomentEstimate> moment_estimates(std::span<const double> xs, int k_max) {
  std::vector<MomentEstimate> out;
  std::vector<double> powers(xs.size());
  for (int k = 1; k <= k_max; ++k) {
    for (std::size_t i = 0; i < xs.size(); ++i) powers[i] = std::pow(xs[i], k);
    const Summary s = summarize(powers);
    const Interval ci = normal_ci(s, 0.99);
    out.push_back({k, s.mean, ci.lo, ci.hi, s.standard_error()});
  }
  return out;
}

}  // namespace

bool SystemState::well_formed() const {
  if (!(x0 >= 0.0)) return false;
  for (std::size_t i = 0; i < elapsed.size(); ++i) {
    if (!(elapsed[i] >= 0.0)) return false;
    if (i > 0 && elapsed[i] > elapsed[i - 1]) return false;
  }
  return elapsed.empty() || x0 <= elapsed.back();
}

double BoundedFactor::operator()(std::size_t n) const {
  const double dn = static_cast<double>(n);
  return lo + (hi - lo) * dn / (dn + scale);
}

double IntensityModel::arrival_rate(std::size_t n, double x0) const {
  return std::visit(Overloaded{
                        [](const rules::ConstantArrival& r) { return r.rate; },
                        [x0](const rules::HazardOfX0& r) { return r.hazard.rate(x0); },
                        [n, x0](const rules::ScaledHazardOfX0& r) {
                          return r.hazard.rate(x0) * r.factor(n);
                        },
                    },
                    arrival);
}

double IntensityModel::service_rate(std::size_t n, double x) const {
  return std::visit(Overloaded{
                        [&](const rules::LowerService&) { return phi.rate(x); },
                        [x](const rules::HazardService& r) { return r.hazard.rate(x); },
                        [n, x](const rules::ScaledHazardService& r) {
                          return r.hazard.rate(x) * r.factor(n);
                        },
                        [&](const rules::SandwichBlendService& r) {
                          const double dn = static_cast<double>(n);
                          const double lo = phi.rate(x);
                          return lo + (q.rate(x) - lo) * dn / (dn + r.scale);
                        },
                    },
                    service);
}

double IntensityModel::service_atom_weight(std::size_t n, double location) const {
  return std::visit(Overloaded{
                        [&](const rules::LowerService&) { return phi.atom_weight_at(location); },
                        [location](const rules::HazardService& r) {
                          return r.hazard.atom_weight_at(location);
                        },
                        [n, location](const rules::ScaledHazardService& r) {
                          return r.hazard.atom_weight_at(location) * r.factor(n);
                        },
                        [&](const rules::SandwichBlendService& r) {
                          const double dn = static_cast<double>(n);
                          const double lo = phi.atom_weight_at(location);
                          return lo + (q.atom_weight_at(location) - lo) * dn / (dn + r.scale);
                        },
                    },
                    service);
}

std::vector<double> IntensityModel::service_atom_locations() const {
  std::vector<double> locs;
  auto add = [&locs](const HazardSpec& h) {
    for (const Atom& a : h.atoms()) locs.push_back(a.location);
  };
  add(phi);
  add(q);
  if (const HazardSpec* h = rule_hazard(service)) add(*h);
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  return locs;
}

HazardSpec IntensityModel::idle_arrival_hazard() const {
  return std::visit(Overloaded{
                        [](const rules::ConstantArrival& r) { return HazardSpec::exponential(r.rate); },
                        [](const rules::HazardOfX0& r) { return r.hazard; },
                        [](const rules::ScaledHazardOfX0& r) {
                          return scaled(r.hazard, r.factor(0));
                        },
                    },
                    arrival);
}

StandardSystem IntensityModel::dominating_system() const { return StandardSystem(lambda_max, phi); }

IntensityModel standard_model(double lambda, const HazardSpec& service) {
  IntensityModel m;
  m.lambda_max = lambda;
  m.lambda_inf = lambda;
  m.lambda0 = HazardSpec::exponential(lambda);
  m.phi = service;
  m.q = service;
  m.arrival = rules::ConstantArrival{lambda};
  m.service = rules::LowerService{};
  return m;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival:
      return "arrival";
    case EventKind::Departure:
      return "departure";
    case EventKind::AtomDeparture:
      return "atom-departure";
  }
  return "unknown";
}

std::string EventLog::to_csv() const {
  std::string out = "time,kind,n_after,x0_after\n";
  char line[128];
  for (const Event& e : events) {
    std::snprintf(line, sizeof line, "%.17g,%s,%zu,%.17g\n", e.time, to_string(e.kind).c_str(),
                  e.n_after, e.x0_after);
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

Simulation::Simulation(const IntensityModel& model, const SystemState& initial,
                       std::uint64_t seed)
    : model_(&model),
      atom_locations_(model.service_atom_locations()),
      base_window_(model.lambda_max > 0.0 ? 0.1 / model.lambda_max : kInf),
      rng_(seed) {
  if (!initial.well_formed()) throw std::invalid_argument("simulation: malformed initial state");
  if (!(model.lambda_max >= 0.0)) throw std::invalid_argument("simulation: lambda_max must be >= 0");
  last_arrival_ = -initial.x0;
  for (double e : initial.elapsed) {
    const auto next = static_cast<std::size_t>(
        std::upper_bound(atom_locations_.begin(), atom_locations_.end(), e) -
        atom_locations_.begin());
    customers_.push_back({-e, next});
  }
}

SystemState Simulation::state() const {
  SystemState s;
  s.x0 = now_ - last_arrival_;
  s.elapsed.reserve(customers_.size());
  for (const Customer& c : customers_) s.elapsed.push_back(elapsed_of(c));
  return s;
}

double Simulation::next_atom_time() const {
  double t = kInf;
  for (const Customer& c : customers_) {
    if (c.next_atom < atom_locations_.size()) {
      t = std::min(t, c.arrival + atom_locations_[c.next_atom]);
    }
  }
  return t;
}

void Simulation::violation(const std::string& what) const {
  const SystemState s = state();
  throw SandwichViolation(what + " at " + describe_state(now_, s.x0, s.elapsed));
}

void Simulation::process_atoms(std::vector<Event>& out) {
  // Customers whose next atom is reached exactly now, by atom location and
  // then by customer index.
  std::vector<std::size_t> crossing;
  for (std::size_t i = 0; i < customers_.size(); ++i) {
    const Customer& c = customers_[i];
    if (c.next_atom < atom_locations_.size() &&
        c.arrival + atom_locations_[c.next_atom] == now_) {
      crossing.push_back(i);
    }
  }
  std::stable_sort(crossing.begin(), crossing.end(), [&](std::size_t a, std::size_t b) {
    return atom_locations_[customers_[a].next_atom] < atom_locations_[customers_[b].next_atom];
  });
  std::vector<bool> gone(customers_.size(), false);
  std::size_t present = customers_.size();
  for (std::size_t i : crossing) {
    Customer& c = customers_[i];
    const double loc = atom_locations_[c.next_atom];
    const double w = model_->service_atom_weight(present, loc);
    if (above(model_->phi.atom_weight_at(loc), w) || above(w, model_->q.atom_weight_at(loc))) {
      violation("service atom weight outside [phi, Q]");
    }
    ++c.next_atom;
    if (rng_.uniform() < -std::expm1(-w)) {
      gone[i] = true;
      --present;
      out.push_back({now_, EventKind::AtomDeparture, present, now_ - last_arrival_});
    }
  }
  std::size_t keep = 0;
  for (std::size_t i = 0; i < customers_.size(); ++i) {
    if (!gone[i]) customers_[keep++] = customers_[i];
  }
  customers_.resize(keep);
}

bool Simulation::advance(double until, std::vector<Event>& out) {
  if (!(now_ < until)) return false;
  const IntensityModel& m = *model_;
  const double t_atom = next_atom_time();
  const double window_end = std::min({until, now_ + base_window_, t_atom});
  const double span = window_end - now_;

  slot_bounds_.resize(customers_.size());
  double total = m.lambda_max;
  for (std::size_t i = 0; i < customers_.size(); ++i) {
    const double e = elapsed_of(customers_[i]);
    slot_bounds_[i] = m.q.max_rate(e, e + span);
    total += slot_bounds_[i];
  }
  const double candidate = total > 0.0 ? now_ + rng_.exponential(total) : kInf;
  if (candidate >= window_end) {
    now_ = window_end;
    if (window_end == t_atom) process_atoms(out);
    return now_ < until;
  }

  now_ = candidate;
  const std::size_t n = customers_.size();
  const double x0 = now_ - last_arrival_;
  const double lambda = m.arrival_rate(n, x0);
  if (above(m.lambda0.rate(x0), lambda) || above(lambda, m.lambda_max)) {
    violation("arrival rate outside [lambda0, Lambda]");
  }
  double u = rng_.uniform() * total;
  if (u < m.lambda_max) {
    if (u < lambda) {
      customers_.push_back({now_, 0});
      last_arrival_ = now_;
      out.push_back({now_, EventKind::Arrival, customers_.size(), 0.0});
    }
    return now_ < until;
  }
  u -= m.lambda_max;
  std::optional<std::size_t> leaving;
  bool decided = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = elapsed_of(customers_[i]);
    const double h = m.service_rate(n, e);
    if (above(m.phi.rate(e), h) || above(h, m.q.rate(e))) {
      violation("service rate outside [phi, Q]");
    }
    if (!decided && u < slot_bounds_[i]) {
      if (u < h) leaving = i;
      decided = true;
    }
    if (!decided) u -= slot_bounds_[i];
  }
  if (leaving) {
    customers_.erase(customers_.begin() + static_cast<std::ptrdiff_t>(*leaving));
    out.push_back({now_, EventKind::Departure, customers_.size(), now_ - last_arrival_});
  }
  return now_ < until;
}

void Simulation::run_until(double until, std::vector<Event>& out) {
  while (advance(until, out)) {
  }
}

void Simulation::force_idle_arrival(double t) {
  if (!customers_.empty()) throw std::logic_error("force_idle_arrival: system is not empty");
  if (!(t >= now_)) throw std::invalid_argument("force_idle_arrival: time runs backwards");
  now_ = t;
  customers_.push_back({now_, 0});
  last_arrival_ = now_;
}

EventLog simulate(const IntensityModel& model, double horizon, std::uint64_t seed,
                  const SystemState& initial, bool record_snapshots) {
  if (!(horizon > 0.0)) throw std::domain_error("simulate: horizon must be positive");
  Simulation sim(model, initial, seed);
  EventLog log;
  std::vector<Event> tick;
  while (true) {
    tick.clear();
    const bool more = sim.advance(horizon, tick);
    for (const Event& e : tick) {
      log.events.push_back(e);
      if (record_snapshots) log.snapshots.push_back(sim.state());
    }
    if (!more) break;
  }
  return log;
}

RegenReport sample_regenerations(const IntensityModel& model, std::size_t count,
                                 std::uint64_t seed, std::size_t cycle_event_cap) {
  if (count < 1) throw std::invalid_argument("sample_regenerations: count must be >= 1");
  if (!(model.lambda_max > 0.0)) {
    throw std::invalid_argument("sample_regenerations: lambda_max must be positive");
  }
  Simulation sim(model, SystemState::empty(), seed);
  RegenReport report;
  bool started = false;
  double regen_time = 0.0;
  double busy_end = 0.0;
  std::size_t ticks = 0;
  std::vector<Event> tick;
  while (report.samples.size() < count) {
    tick.clear();
    sim.advance(kInf, tick);
    if (++ticks > cycle_event_cap) {
      throw std::runtime_error("sample_regenerations: cycle exceeded " +
                               std::to_string(cycle_event_cap) + " steps at t=" +
                               std::to_string(sim.time()));
    }
    for (const Event& e : tick) {
      if (e.kind == EventKind::Arrival && e.n_after == 1) {
        if (started) {
          const double zeta = busy_end - regen_time;
          const double sigma = e.time - busy_end;
          report.samples.push_back({sigma, zeta, sigma + zeta});
          if (report.samples.size() == count) break;
        }
        started = true;
        regen_time = e.time;
        report.regeneration_states.push_back(sim.state());
        ticks = 0;
      } else if (e.n_after == 0 && e.kind != EventKind::Arrival) {
        busy_end = e.time;
      }
    }
  }
  report.regeneration_states.resize(report.samples.size());
  std::vector<double> sigma;
  std::vector<double> zeta;
  std::vector<double> r;
  for (const RegenSample& s : report.samples) {
    sigma.push_back(s.sigma);
    zeta.push_back(s.zeta);
    r.push_back(s.r);
  }
  report.sigma_moments = moment_estimates(sigma, 4);
  report.zeta_moments = moment_estimates(zeta, 4);
  report.r_moments = moment_estimates(r, 4);
  return report;
}

bool has_ordered_injection(std::span<const double> x, std::span<const double> y) {
  std::size_t j = 0;
  for (double xi : x) {
    while (j < y.size() && y[j] < xi) ++j;
    if (j == y.size()) return false;
    ++j;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Dominated pair

DominationReport simulate_dominated_pair(const IntensityModel& model, double horizon,
                                         std::uint64_t seed, std::size_t max_events) {
  if (!(horizon > 0.0)) throw std::domain_error("simulate_dominated_pair: horizon must be positive");
  struct Customer {
    double arrival;
    std::size_t next_atom;
    bool in_x;
  };
  const std::vector<double> atoms = model.service_atom_locations();
  const double lambda_max = model.lambda_max;
  const double base_window = lambda_max > 0.0 ? 0.1 / lambda_max : kInf;
  Rng rng(seed);

  DominationReport report;
  std::vector<Customer> ys;
  double now = 0.0;
  double last_x = 0.0;
  double last_y = 0.0;
  double busy_start_x = 0.0;
  double busy_start_y = 0.0;
  std::size_t prev_n = 0;
  std::size_t prev_m = 0;
  std::vector<double> slots;
  std::vector<double> ex;
  std::vector<double> ey;

  auto count_x = [&ys] {
    return static_cast<std::size_t>(
        std::count_if(ys.begin(), ys.end(), [](const Customer& c) { return c.in_x; }));
  };
  auto fail = [&](const std::string& what) {
    ex.clear();
    for (const Customer& c : ys) {
      if (c.in_x) ex.push_back(now - c.arrival);
    }
    throw SandwichViolation(what + " at " + describe_state(now, now - last_x, ex));
  };
  auto record = [&] {
    const std::size_t n = count_x();
    const std::size_t m = ys.size();
    report.events.push_back({now, n, m});
    ex.clear();
    ey.clear();
    for (const Customer& c : ys) {
      ey.push_back(now - c.arrival);
      if (c.in_x) ex.push_back(now - c.arrival);
    }
    if (n > m) {
      ++report.count_violations;
      report.details.push_back("n_t > m_t at t=" + std::to_string(now));
    }
    if (!has_ordered_injection(ex, ey)) {
      ++report.injection_violations;
      report.details.push_back("no elapsed-time injection at t=" + std::to_string(now));
    }
    if (n != m) report.identical_paths = false;
    if (prev_n == 0 && n > 0) busy_start_x = now;
    if (prev_n > 0 && n == 0) report.busy_x.push_back(now - busy_start_x);
    if (prev_m == 0 && m > 0) busy_start_y = now;
    if (prev_m > 0 && m == 0) report.busy_y.push_back(now - busy_start_y);
    prev_n = n;
    prev_m = m;
  };

  while (now < horizon && report.events.size() < max_events) {
    double t_atom = kInf;
    for (const Customer& c : ys) {
      if (c.next_atom < atoms.size()) t_atom = std::min(t_atom, c.arrival + atoms[c.next_atom]);
    }
    const double window_end = std::min({horizon, now + base_window, t_atom});
    const double span = window_end - now;
    slots.resize(ys.size());
    double total = lambda_max;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double e = now - ys[i].arrival;
      slots[i] = model.q.max_rate(e, e + span);
      total += slots[i];
    }
    const double candidate = total > 0.0 ? now + rng.exponential(total) : kInf;

    if (candidate >= window_end) {
      now = window_end;
      if (window_end != t_atom) continue;
      std::vector<std::size_t> crossing;
      for (std::size_t i = 0; i < ys.size(); ++i) {
        if (ys[i].next_atom < atoms.size() && ys[i].arrival + atoms[ys[i].next_atom] == now) {
          crossing.push_back(i);
        }
      }
      std::stable_sort(crossing.begin(), crossing.end(), [&](std::size_t a, std::size_t b) {
        return atoms[ys[a].next_atom] < atoms[ys[b].next_atom];
      });
      std::vector<bool> gone(ys.size(), false);
      std::size_t n_x = count_x();
      bool changed = false;
      for (std::size_t i : crossing) {
        Customer& c = ys[i];
        const double loc = atoms[c.next_atom];
        ++c.next_atom;
        const double wy = model.phi.atom_weight_at(loc);
        const double u = rng.uniform();
        double wx = 0.0;
        if (c.in_x) {
          wx = model.service_atom_weight(n_x, loc);
          if (above(wy, wx) || above(wx, model.q.atom_weight_at(loc))) {
            fail("service atom weight outside [phi, Q]");
          }
        }
        if (u < -std::expm1(-wy)) {
          if (c.in_x) --n_x;
          gone[i] = true;
          changed = true;
        } else if (c.in_x && u < -std::expm1(-wx)) {
          c.in_x = false;
          --n_x;
          changed = true;
        }
      }
      std::size_t keep = 0;
      for (std::size_t i = 0; i < ys.size(); ++i) {
        if (!gone[i]) ys[keep++] = ys[i];
      }
      ys.resize(keep);
      if (changed) record();
      continue;
    }

    now = candidate;
    const std::size_t n_x = count_x();
    double u = rng.uniform() * total;
    if (u < lambda_max) {
      const double x0 = now - last_x;
      const double lambda = model.arrival_rate(n_x, x0);
      if (above(model.lambda0.rate(x0), lambda) || above(lambda, lambda_max)) {
        fail("arrival rate outside [lambda0, Lambda]");
      }
      const bool accepted = u < lambda;
      ys.push_back({now, 0, accepted});
      last_y = now;
      if (accepted) last_x = now;
      record();
      continue;
    }
    u -= lambda_max;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (u >= slots[i]) {
        u -= slots[i];
        continue;
      }
      const double e = now - ys[i].arrival;
      const double phi = model.phi.rate(e);
      if (ys[i].in_x) {
        const double h = model.service_rate(n_x, e);
        if (above(phi, h) || above(h, model.q.rate(e))) fail("service rate outside [phi, Q]");
        if (u < phi) {
          ys.erase(ys.begin() + static_cast<std::ptrdiff_t>(i));
          record();
        } else if (u < h) {
          ys[i].in_x = false;
          record();
        }
      } else if (u < phi) {
        ys.erase(ys.begin() + static_cast<std::ptrdiff_t>(i));
        record();
      }
      break;
    }
  }
  (void)last_y;
  return report;
}

// ---------------------------------------------------------------------------
// Model audit

std::vector<std::string> validate_model(const IntensityModel& model, std::size_t sample_count,
                                        std::uint64_t seed) {
  std::vector<std::string> out;
  auto report = [&out](const std::string& msg) {
    if (out.size() < 100) out.push_back(msg);
  };

  if (!(model.lambda_max >= 0.0) || !std::isfinite(model.lambda_max)) {
    report("Lambda must be finite and >= 0");
  }
  if (!(model.lambda_inf > 0.0)) report("lambda_inf must be positive");
  {
    double lo = model.lambda0.tail_rate();
    for (std::size_t i = 0; i < model.lambda0.knots().size(); ++i) {
      if (i > 0 || model.lambda0.knots().size() > 1) lo = std::min(lo, model.lambda0.rates()[i]);
    }
    if (above(model.lambda_inf, lo)) report("lambda0 drops below lambda_inf");
  }
  if (!model.lambda0.atoms().empty()) report("lambda0 must not carry atoms");
  if (const auto at = ordering_violation(model.phi, model.q)) {
    report("phi exceeds Q at t=" + std::to_string(*at));
  }
  if (const HazardSpec* h = rule_hazard(model.arrival); h && !h->atoms().empty()) {
    report("arrival hazards must not carry atoms");
  }

  double scale = std::max({model.phi.horizon(), model.q.horizon(), model.lambda0.horizon()});
  if (const HazardSpec* h = rule_hazard(model.service)) scale = std::max(scale, h->horizon());
  if (const HazardSpec* h = rule_hazard(model.arrival)) scale = std::max(scale, h->horizon());
  scale = 2.0 * scale + 5.0;
  const std::vector<double> atom_locs = model.service_atom_locations();

  Rng rng(seed);
  SystemState s;
  for (std::size_t trial = 0; trial < sample_count; ++trial) {
    const std::size_t n = rng.below(51);
    s.elapsed.resize(n);
    for (double& e : s.elapsed) e = rng.uniform() * scale;
    std::sort(s.elapsed.begin(), s.elapsed.end(), std::greater<>());
    s.x0 = rng.uniform() * (n > 0 ? s.elapsed.back() : scale);

    const double lambda = model.arrival_rate(n, s.x0);
    if (above(model.lambda0.rate(s.x0), lambda) || above(lambda, model.lambda_max)) {
      std::ostringstream os;
      os << "arrival rate " << lambda << " outside [" << model.lambda0.rate(s.x0) << ", "
         << model.lambda_max << "] at " << describe_state(0.0, s.x0, s.elapsed);
      report(os.str());
    }
    for (double e : s.elapsed) {
      const double h = model.service_rate(n, e);
      if (above(model.phi.rate(e), h) || above(h, model.q.rate(e))) {
        std::ostringstream os;
        os << "service rate " << h << " outside [" << model.phi.rate(e) << ", "
           << model.q.rate(e) << "] at elapsed " << e << " with n=" << n;
        report(os.str());
        break;
      }
    }
    for (double loc : atom_locs) {
      const double w = model.service_atom_weight(std::max<std::size_t>(n, 1), loc);
      if (above(model.phi.atom_weight_at(loc), w) || above(w, model.q.atom_weight_at(loc))) {
        std::ostringstream os;
        os << "service atom weight " << w << " at " << loc << " outside [phi, Q] with n=" << n;
        report(os.str());
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Empirical total variation

std::vector<TvEstimate> empirical_tv(const IntensityModel& model, const SystemState& init_a,
                                     const SystemState& init_b, std::span<const double> times,
                                     std::size_t reps, std::uint64_t seed, double bin_width,
                                     std::size_t bootstrap_rounds) {
  if (reps < 1000) throw std::invalid_argument("empirical_tv: reps must be >= 1000");
  if (!(bin_width > 0.0)) throw std::invalid_argument("empirical_tv: bin_width must be positive");
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && !(sorted.front() > 0.0)) {
    throw std::invalid_argument("empirical_tv: times must be positive");
  }

  using Cell = std::pair<std::size_t, long>;
  // cells[side][time][rep]
  std::vector<std::vector<std::vector<Cell>>> cells(
      2, std::vector<std::vector<Cell>>(sorted.size(), std::vector<Cell>(reps)));
  std::vector<Event> scratch;
  for (std::size_t r = 0; r < reps; ++r) {
    for (int side = 0; side < 2; ++side) {
      Simulation sim(model, side == 0 ? init_a : init_b, stream_seed(seed, 2 * r + side));
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        scratch.clear();
        sim.run_until(sorted[i], scratch);
        const SystemState st = sim.state();
        cells[side][i][r] = {st.n(), static_cast<long>(std::floor(st.x0 / bin_width))};
      }
    }
  }

  Rng boot(stream_seed(seed, 0xb007'5742ULL));
  std::vector<TvEstimate> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::map<Cell, std::size_t> index;
    for (int side = 0; side < 2; ++side) {
      for (const Cell& c : cells[side][i]) index.emplace(c, index.size());
    }
    std::vector<std::size_t> code_a(reps);
    std::vector<std::size_t> code_b(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      code_a[r] = index.at(cells[0][i][r]);
      code_b[r] = index.at(cells[1][i][r]);
    }
    std::vector<double> ca(index.size());
    std::vector<double> cb(index.size());
    auto distance = [&] {
      double d = 0.0;
      for (std::size_t c = 0; c < ca.size(); ++c) d += std::abs(ca[c] - cb[c]);
      return 0.5 * d / static_cast<double>(reps);
    };
    std::fill(ca.begin(), ca.end(), 0.0);
    std::fill(cb.begin(), cb.end(), 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      ca[code_a[r]] += 1.0;
      cb[code_b[r]] += 1.0;
    }
    TvEstimate est;
    est.t = sorted[i];
    est.tv = distance();

    std::vector<double> boots;
    for (std::size_t b = 0; b < bootstrap_rounds; ++b) {
      std::fill(ca.begin(), ca.end(), 0.0);
      std::fill(cb.begin(), cb.end(), 0.0);
      for (std::size_t r = 0; r < reps; ++r) {
        ca[code_a[boot.below(reps)]] += 1.0;
        cb[code_b[boot.below(reps)]] += 1.0;
      }
      boots.push_back(distance());
    }
    if (!boots.empty()) {
      std::sort(boots.begin(), boots.end());
      const auto pick = [&](double q) {
        const auto idx = static_cast<std::size_t>(q * static_cast<double>(boots.size() - 1));
        return boots[idx];
      };
      est.ci_lo = pick(0.025);
      est.ci_hi = pick(0.975);
    } else {
      est.ci_lo = est.ci_hi = est.tv;
    }
    out.push_back(est);
  }
  return out;
}

}  // namespace esq
