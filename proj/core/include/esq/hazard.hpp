#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace esq {

// Point mass of a lifetime distribution: the survival function drops by the
// factor exp(-weight) at `location`.
struct Atom {
  double location = 0.0;
  double weight = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Generalized hazard rate: a continuous part that is piecewise linear on
/// `knots` and constant (`tail_rate`) beyond the last knot, plus a list of
/// atoms. The induced lifetime has survival
///
///     S(t) = exp(-int_0^t h(s) ds - sum_{a_j <= t} w_j),
///
/// which is right-continuous, starts at 1 and decays to 0 because the tail
/// rate is strictly positive.
///
/// The continuous rate is right-continuous at the last knot: on
/// [t_{m-1}, t_m) it interpolates rates[m-1] -> rates[m], and from t_m on it
/// equals tail_rate. With a single knot the rate is tail_rate everywhere.
class HazardSpec {
 public:
  HazardSpec(std::vector<double> knots, std::vector<double> rates,
             double tail_rate, std::vector<Atom> atoms = {});

  static HazardSpec exponential(double rate);
  // Pure atom at d with weight 36.8 (survival past d below 1e-16).
  static HazardSpec deterministic(double d);
  // Samples h on the uniform grid 0, step, ..., t_end; the tail continues
  // with h(t_end).
  static HazardSpec from_hazard_fn(const std::function<double(double)>& h,
                                   double t_end, double step,
                                   std::vector<Atom> atoms = {});
  // Rebuilds a hazard from a CDF sampled on `grid` (starting at 0). Each
  // entry of `jumps` becomes an atom with w = ln(S(a-)/S(a+)); the continuous
  // rate at each knot is the numerical derivative of the continuous part of
  // -ln S.
  static HazardSpec from_cdf(const std::function<double(double)>& cdf,
                             std::span<const double> grid, double tail_rate,
                             std::span<const double> jumps = {});

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& rates() const { return rates_; }
  double tail_rate() const { return tail_rate_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double last_knot() const { return knots_.back(); }
  // Past this time the hazard is the constant tail rate with no atoms.
  double horizon() const;

  // Continuous rate at t >= 0.
  double rate(double t) const;
  // Upper bound of the continuous rate over [a, b].
  double max_rate(double a, double b) const;
  // int_0^t of the continuous rate.
  double cumulative(double t) const;
  // Sum of atom weights at locations <= t.
  double atom_weight_through(double t) const;
  // Weight of the atom exactly at `location`, or 0.
  double atom_weight_at(double location) const;
  // Breakpoints of the piecewise representation: 0, knots and atoms, sorted.
  std::vector<double> breakpoints() const;

  friend bool operator==(const HazardSpec&, const HazardSpec&) = default;

 private:
  std::vector<double> knots_;
  std::vector<double> rates_;
  double tail_rate_;
  std::vector<Atom> atoms_;
  std::vector<double> prefix_;  // cumulative hazard at each knot
};

struct MomentVector {
  int k_max = 0;
  std::vector<double> m;  // m[k-1] = E X^k

  double operator[](int k) const { return m.at(static_cast<std::size_t>(k - 1)); }
};

double survival(const HazardSpec& spec, double t);
// Survival just before t (excludes an atom at t).
double survival_left(const HazardSpec& spec, double t);
double cdf(const HazardSpec& spec, double t);
// Continuous density h(t) S(t); atoms are reported by atom_mass.
double density(const HazardSpec& spec, double t);
double atom_mass(const HazardSpec& spec, double location);

// E X^k via k int_0^inf t^{k-1} S(t) dt, piecewise adaptive quadrature up to
// the horizon and a closed-form exponential tail beyond it.
double moment(const HazardSpec& spec, int k);
MomentVector moments(const HazardSpec& spec, int k_max);

// int_a^b S(t) dt.
double survival_integral(const HazardSpec& spec, double a, double b);

// Inverse transform: smallest t with 1 - S(t) >= u, for u in (0, 1).
double sample(const HazardSpec& spec, double u);

// Hazard of the remaining lifetime after surviving `elapsed`.
HazardSpec residual(const HazardSpec& spec, double elapsed);

// Common-part coefficient int min(f_a, f_b) of the continuous densities plus
// the shared atom masses.
double overlap(const HazardSpec& a, const HazardSpec& b);

// Pointwise (1 - w) a + w b, including atom weights and tail rates. Throws
// std::invalid_argument when a component jumps at an interior merged knot,
// which the piecewise-linear form cannot represent.
HazardSpec blend(const HazardSpec& a, const HazardSpec& b, double w);
HazardSpec scaled(const HazardSpec& spec, double factor);

// First location where lo's hazard exceeds hi's by more than tol (continuous
// rates compared on the merged grid, atoms compared by weight).
std::optional<double> ordering_violation(const HazardSpec& lo,
                                         const HazardSpec& hi,
                                         double tol = 1e-12);

std::string describe(const HazardSpec& spec);

}  // namespace esq
