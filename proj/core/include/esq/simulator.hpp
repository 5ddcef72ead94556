#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "esq/hazard.hpp"
#include "esq/lorden.hpp"
#include "esq/mginf.hpp"
#include "esq/random.hpp"

namespace esq {

// Full state of the extended system: elapsed time since the last arrival
// and the elapsed service times of all customers present, sorted descending.
struct SystemState {
  double x0 = 0.0;
  std::vector<double> elapsed;

  std::size_t n() const { return elapsed.size(); }
  // elapsed sorted descending and x0 <= smallest elapsed.
  bool well_formed() const;
  static SystemState empty() { return {}; }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

// f(n) = lo + (hi - lo) n / (n + scale), valued in [lo, hi).
struct BoundedFactor {
  double lo = 1.0;
  double hi = 1.0;
  double scale = 1.0;

  double operator()(std::size_t n) const;
};

namespace rules {

struct ConstantArrival {
  double rate = 1.0;
};
// lambda = h(x0).
struct HazardOfX0 {
  HazardSpec hazard;
};
// lambda = h(x0) f(n).
struct ScaledHazardOfX0 {
  HazardSpec hazard;
  BoundedFactor factor;
};

// h_i = phi(x_i): the standard system's service.
struct LowerService {};
// h_i = g(x_i).
struct HazardService {
  HazardSpec hazard;
};
// h_i = g(x_i) f(n); atom weights scale by the same factor.
struct ScaledHazardService {
  HazardSpec hazard;
  BoundedFactor factor;
};
// h_i = phi(x_i) + (Q(x_i) - phi(x_i)) n / (n + scale): busier systems serve
// faster, always inside [phi, Q].
struct SandwichBlendService {
  double scale = 1.0;
};

}  // namespace rules

using ArrivalRule =
    std::variant<rules::ConstantArrival, rules::HazardOfX0, rules::ScaledHazardOfX0>;
using ServiceRule = std::variant<rules::LowerService, rules::HazardService,
                                 rules::ScaledHazardService, rules::SandwichBlendService>;

// State-dependent intensities together with their declared bounds:
// lambda0(x0) <= lambda(X) <= lambda_max and phi(x_i) <= h_i(X) <= Q(x_i).
struct IntensityModel {
  double lambda_max = 1.0;  // the constant upper arrival bound
  double lambda_inf = 1.0;  // inf of lambda0, used where a scalar is needed
  HazardSpec lambda0 = HazardSpec::exponential(1.0);
  HazardSpec phi = HazardSpec::exponential(1.0);
  HazardSpec q = HazardSpec::exponential(1.0);
  ArrivalRule arrival = rules::ConstantArrival{1.0};
  ServiceRule service = rules::LowerService{};

  // lambda at a state with n customers and elapsed x0 since the last arrival.
  double arrival_rate(std::size_t n, double x0) const;
  // Continuous service hazard of a customer with elapsed x among n present.
  double service_rate(std::size_t n, double x) const;
  // Atom weight of the service hazard at elapsed time `location`.
  double service_atom_weight(std::size_t n, double location) const;
  // Union of atom locations of phi, Q and the service rule.
  std::vector<double> service_atom_locations() const;
  // Arrival hazard of an empty system as a function of x0.
  HazardSpec idle_arrival_hazard() const;

  // The dominating M|G|inf system (lambda_max, phi).
  StandardSystem dominating_system() const;
  HazardSandwich service_sandwich() const { return {phi, q}; }
};

// The standard system itself: constant arrivals at Lambda, service phi = Q.
IntensityModel standard_model(double lambda, const HazardSpec& service);

enum class EventKind { Arrival, Departure, AtomDeparture };
std::string to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  std::size_t n_after = 0;
  double x0_after = 0.0;
};

struct EventLog {
  std::vector<Event> events;
  // Full states after each event, when requested.
  std::vector<SystemState> snapshots;
  std::string to_csv() const;
};

// Event-driven simulation of X_t by thinning against a local majorant. The
// instance owns its generator and advances one tick at a time.
class Simulation {
 public:
  Simulation(const IntensityModel& model, const SystemState& initial, std::uint64_t seed);

  double time() const { return now_; }
  std::size_t n() const { return customers_.size(); }
  SystemState state() const;

  // Processes one candidate or one deterministic window, never passing
  // `until`. Appends events that occurred; returns false once time() == until.
  bool advance(double until, std::vector<Event>& out);
  // Runs to `until`, appending all events.
  void run_until(double until, std::vector<Event>& out);
  // Moves an empty system to time t > time() and admits an arrival there.
  void force_idle_arrival(double t);

 private:
  struct Customer {
    double arrival;
    std::size_t next_atom;  // index into atom_locations_
  };

  double elapsed_of(const Customer& c) const { return now_ - c.arrival; }
  double next_atom_time() const;
  void process_atoms(std::vector<Event>& out);
  [[noreturn]] void violation(const std::string& what) const;

  const IntensityModel* model_;
  std::vector<double> atom_locations_;
  double base_window_;
  double now_ = 0.0;
  double last_arrival_ = 0.0;
  std::vector<Customer> customers_;  // oldest first
  std::vector<double> slot_bounds_;
  Rng rng_;
};

// Raised when a regeneration cycle exceeds its event budget.
inline constexpr std::size_t kDefaultCycleEventCap = 10'000'000;

EventLog simulate(const IntensityModel& model, double horizon, std::uint64_t seed,
                  const SystemState& initial = SystemState::empty(),
                  bool record_snapshots = false);

struct RegenSample {
  double sigma = 0.0;  // idle period following the busy period
  double zeta = 0.0;   // busy period started by the regeneration arrival
  double r = 0.0;      // sigma + zeta
};

struct MomentEstimate {
  int k = 1;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double standard_error = 0.0;
};

struct RegenReport {
  std::vector<RegenSample> samples;
  std::vector<MomentEstimate> sigma_moments;  // k = 1..4
  std::vector<MomentEstimate> zeta_moments;
  std::vector<MomentEstimate> r_moments;
  // States immediately after each regeneration arrival.
  std::vector<SystemState> regeneration_states;
};

// Cycles start at arrivals into an empty system; the initial stretch from the
// empty start to the first such arrival is not a cycle.
RegenReport sample_regenerations(const IntensityModel& model, std::size_t count,
                                 std::uint64_t seed,
                                 std::size_t cycle_event_cap = kDefaultCycleEventCap);

struct PairEvent {
  double time = 0.0;
  std::size_t n_x = 0;
  std::size_t m_y = 0;
};

struct DominationReport {
  std::vector<PairEvent> events;
  std::size_t count_violations = 0;      // n_t > m_t
  std::size_t injection_violations = 0;  // no order-preserving x <= y matching
  std::vector<std::string> details;
  std::vector<double> busy_x;            // completed busy periods of X
  std::vector<double> busy_y;            // completed busy periods of Y
  bool identical_paths = true;           // X and Y coincided at every event
};

// X and its dominating standard system Y on one probability space. Y has
// Poisson(lambda_max) arrivals and service hazard phi; X keeps an arrival
// with probability lambda(X)/lambda_max and shares every departure draw with
// Y through nested thresholds, so each X customer is also a Y customer with
// the same elapsed time. Stops at `horizon` or after `max_events` events.
DominationReport simulate_dominated_pair(const IntensityModel& model, double horizon,
                                         std::uint64_t seed,
                                         std::size_t max_events = SIZE_MAX);

// Greedy check that sorted-descending x embeds into sorted-descending y with
// x_i <= y_{k_i} for increasing k_i.
bool has_ordered_injection(std::span<const double> x, std::span<const double> y);

// Audits the sandwich inequalities on random states; empty means pass.
std::vector<std::string> validate_model(const IntensityModel& model,
                                        std::size_t sample_count, std::uint64_t seed);

struct TvEstimate {
  double t = 0.0;
  double tv = 0.0;  // (1/2) sum |p_a - p_b| over (n_t, floor(x0 / bin)) cells
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Empirical distance between the laws of X_t from two initial states, on the
// (n_t, binned x0) marginal. Bootstrap percentile interval at 95%.
std::vector<TvEstimate> empirical_tv(const IntensityModel& model, const SystemState& init_a,
                                     const SystemState& init_b, std::span<const double> times,
                                     std::size_t reps, std::uint64_t seed,
                                     double bin_width = 0.5,
                                     std::size_t bootstrap_rounds = 200);

}  // namespace esq
