#include "esq/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace esq {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-12;

template <class F>
double integrate(F&& f, double a, double b, double tol = kQuadTol, double abs = 0.0) {
  return detail::adaptive_gk(f, a, b, tol, abs);
}

void merge_sorted_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Value of the continuous rate used by the segment that ends at q.
double left_limit(const HazardSpec& s, double q) {
  if (q > s.last_knot()) return s.tail_rate();
  if (q == s.last_knot()) return s.rates().back();
  return s.rate(q);
}

// int_a^b g(t) S(t) dt, split at breakpoints so that the atom sum is
// constant and the continuous rate is linear on every piece.
template <class G>
double integrate_against_survival(const HazardSpec& spec, double a, double b,
                                  G&& g) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a, b};
  const auto& knots = spec.knots();
  for (auto it = std::upper_bound(knots.begin(), knots.end(), a);
       it != knots.end() && *it < b; ++it) {
    cuts.push_back(*it);
  }
  for (const Atom& at : spec.atoms()) {
    if (at.location > a && at.location < b) cuts.push_back(at.location);
  }
  merge_sorted_unique(cuts);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    const double w = spec.atom_weight_through(p);
    if (spec.cumulative(p) + w > 745.0) break;  // S underflows from here on
    total += integrate(
        [&](double t) { return g(t) * std::exp(-(spec.cumulative(t) + w)); },
        p, q, kQuadTol, 1e-3 * kQuadTol * total);
  }
  return total;
}

// int_T^inf t^{k-1} exp(-lambda (t - T)) dt for integer k >= 1.
double exponential_tail_power(double T, double lambda, int k) {
  // sum_{j=0}^{k-1} (k-1)!/(k-1-j)! T^{k-1-j} / lambda^{j+1}
  double total = 0.0;
  double falling = 1.0;  // (k-1)(k-2)...(k-j)
  for (int j = 0; j < k; ++j) {
    total += falling * std::pow(T, k - 1 - j) / std::pow(lambda, j + 1);
    falling *= static_cast<double>(k - 1 - j);
  }
  return total;
}

}  // namespace

HazardSpec::HazardSpec(std::vector<double> knots, std::vector<double> rates,
                       double tail_rate, std::vector<Atom> atoms)
    : knots_(std::move(knots)),
      rates_(std::move(rates)),
      tail_rate_(tail_rate),
      atoms_(std::move(atoms)) {
  if (knots_.empty() || knots_.size() != rates_.size()) {
    throw std::invalid_argument("hazard: knots and rates must be nonempty and of equal length");
  }
  if (knots_.front() != 0.0) {
    throw std::invalid_argument("hazard: first knot must be 0");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || (i > 0 && !(knots_[i] > knots_[i - 1]))) {
      throw std::invalid_argument("hazard: knots must be finite and strictly increasing");
    }
    if (!std::isfinite(rates_[i]) || rates_[i] < 0.0) {
      throw std::invalid_argument("hazard: rates must be finite and nonnegative");
    }
  }
  if (!std::isfinite(tail_rate_) || !(tail_rate_ > 0.0)) {
    throw std::invalid_argument("hazard: tail_rate must be finite and positive");
  }
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    const Atom& at = atoms_[j];
    if (!std::isfinite(at.location) || !(at.location > 0.0)) {
      throw std::invalid_argument("hazard: atom locations must be positive");
    }
    if (j > 0 && !(at.location > atoms_[j - 1].location)) {
      throw std::invalid_argument("hazard: atom locations must be strictly increasing");
    }
    if (!std::isfinite(at.weight) || !(at.weight > 0.0)) {
      throw std::invalid_argument("hazard: atom weights must be positive");
    }
  }
  prefix_.assign(knots_.size(), 0.0);
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    prefix_[i] = prefix_[i - 1] +
                 0.5 * (rates_[i - 1] + rates_[i]) * (knots_[i] - knots_[i - 1]);
  }
}

HazardSpec HazardSpec::exponential(double rate) {
  return HazardSpec({0.0}, {rate}, rate);
}

HazardSpec HazardSpec::deterministic(double d) {
  if (!(d > 0.0)) throw std::invalid_argument("deterministic: d must be positive");
  return HazardSpec({0.0, d}, {0.0, 0.0}, 1.0, {{d, 36.8}});
}

HazardSpec HazardSpec::from_hazard_fn(const std::function<double(double)>& h,
                                      double t_end, double step,
                                      std::vector<Atom> atoms) {
  if (!(step > 0.0) || !(t_end >= 0.0)) {
    throw std::invalid_argument("from_hazard_fn: need step > 0 and t_end >= 0");
  }
  const auto n = static_cast<std::size_t>(std::llround(t_end / step));
  std::vector<double> knots(n + 1);
  std::vector<double> rates(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    knots[i] = (i == n) ? t_end : static_cast<double>(i) * step;
    rates[i] = h(knots[i]);
  }
  const double tail = h(t_end);
  return HazardSpec(std::move(knots), std::move(rates), tail, std::move(atoms));
}

HazardSpec HazardSpec::from_cdf(const std::function<double(double)>& cdf_fn,
                                std::span<const double> grid, double tail_rate,
                                std::span<const double> jumps) {
  if (grid.size() < 2 || grid[0] != 0.0) {
    throw std::invalid_argument("from_cdf: need >= 2 grid points starting at 0");
  }
  auto neg_log_survival = [&](double t) {
    const double s = 1.0 - cdf_fn(t);
    if (!(s > 0.0)) throw std::invalid_argument("from_cdf: CDF reaches 1 on the grid");
    return -std::log(s);
  };
  std::vector<Atom> atoms;
  for (double a : jumps) {
    const double before = neg_log_survival(std::nextafter(a, 0.0));
    const double after = neg_log_survival(a);
    if (after > before) atoms.push_back({a, after - before});
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& x, const Atom& y) { return x.location < y.location; });

  // The continuous part has a kink at each jump; pin a knot on either side so
  // the linear interpolation does not smear it.
  std::vector<double> knots(grid.begin(), grid.end());
  for (const Atom& at : atoms) {
    if (at.location <= 0.0 || at.location > grid.back()) continue;
    knots.push_back(at.location);
    knots.push_back(at.location - 1e-9 * std::max(1.0, at.location));
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  auto is_jump = [&](double t) {
    return std::any_of(atoms.begin(), atoms.end(), [t](const Atom& at) { return at.location == t; });
  };

  const std::size_t n = knots.size();
  std::vector<double> continuous(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.0;
    for (const Atom& at : atoms) {
      if (at.location <= knots[i]) w += at.weight;
    }
    continuous[i] = neg_log_survival(knots[i]) - w;
  }
  std::vector<double> rates(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i == 0 ? 0 : i - 1;
    std::size_t hi = i + 1 == n ? i : i + 1;
    if (is_jump(knots[i]) && hi > i) lo = i;
    if (hi > i && is_jump(knots[hi]) && lo < i) hi = i;
    rates[i] = std::max(0.0, (continuous[hi] - continuous[lo]) / (knots[hi] - knots[lo]));
  }
  return HazardSpec(std::move(knots), std::move(rates), tail_rate, std::move(atoms));
}

double HazardSpec::horizon() const {
  double h = knots_.back();
  if (!atoms_.empty()) h = std::max(h, atoms_.back().location);
  return h;
}

double HazardSpec::rate(double t) const {
  if (t >= knots_.back()) return tail_rate_;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double frac = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return rates_[i] + frac * (rates_[i + 1] - rates_[i]);
}

double HazardSpec::max_rate(double a, double b) const {
  double m = std::max(rate(a), rate(b));
  const auto first = std::upper_bound(knots_.begin(), knots_.end(), a);
  for (auto it = first; it != knots_.end() && *it <= b; ++it) {
    m = std::max(m, rates_[static_cast<std::size_t>(it - knots_.begin())]);
  }
  if (b >= knots_.back()) m = std::max(m, tail_rate_);
  return m;
}

double HazardSpec::cumulative(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= knots_.back()) return prefix_.back() + tail_rate_ * (t - knots_.back());
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double dx = t - knots_[i];
  const double slope = (rates_[i + 1] - rates_[i]) / (knots_[i + 1] - knots_[i]);
  return prefix_[i] + rates_[i] * dx + 0.5 * slope * dx * dx;
}

double HazardSpec::atom_weight_through(double t) const {
  double w = 0.0;
  for (const Atom& a : atoms_) {
    if (a.location > t) break;
    w += a.weight;
  }
  return w;
}

double HazardSpec::atom_weight_at(double location) const {
  for (const Atom& a : atoms_) {
    if (a.location == location) return a.weight;
    if (a.location > location) break;
  }
  return 0.0;
}

std::vector<double> HazardSpec::breakpoints() const {
  std::vector<double> b(knots_);
  for (const Atom& a : atoms_) b.push_back(a.location);
  merge_sorted_unique(b);
  return b;
}

double survival(const HazardSpec& spec, double t) {
  if (!(t >= 0.0)) throw std::domain_error("survival: t must be >= 0");
  return std::exp(-(spec.cumulative(t) + spec.atom_weight_through(t)));
}

double survival_left(const HazardSpec& spec, double t) {
  if (!(t >= 0.0)) throw std::domain_error("survival_left: t must be >= 0");
  return std::exp(-(spec.cumulative(t) + spec.atom_weight_through(t) -
                    spec.atom_weight_at(t)));
}

double cdf(const HazardSpec& spec, double t) { return -std::expm1(-(spec.cumulative(t) + spec.atom_weight_through(t))); }

double density(const HazardSpec& spec, double t) {
  return spec.rate(t) * survival(spec, t);
}

double atom_mass(const HazardSpec& spec, double location) {
  const double w = spec.atom_weight_at(location);
  if (w == 0.0) return 0.0;
  return survival_left(spec, location) * -std::expm1(-w);
}

double survival_integral(const HazardSpec& spec, double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) throw std::domain_error("survival_integral: need 0 <= a <= b");
  const double T = spec.horizon();
  double total = integrate_against_survival(spec, a, std::min(b, T),
                                            [](double) { return 1.0; });
  if (b > T) {
    const double start = std::max(a, T);
    const double lambda = spec.tail_rate();
    const double s0 = survival(spec, start);
    if (std::isinf(b)) {
      total += s0 / lambda;
    } else {
      total += s0 * -std::expm1(-lambda * (b - start)) / lambda;
    }
  }
  return total;
}

double moment(const HazardSpec& spec, int k) {
  if (k < 1) throw std::domain_error("moment: k must be >= 1");
  const double T = spec.horizon();
  const double body = integrate_against_survival(
      spec, 0.0, T, [k](double t) { return std::pow(t, k - 1); });
  const double tail = survival(spec, T) * exponential_tail_power(T, spec.tail_rate(), k);
  return static_cast<double>(k) * (body + tail);
}

MomentVector moments(const HazardSpec& spec, int k_max) {
  MomentVector mv;
  mv.k_max = k_max;
  for (int k = 1; k <= k_max; ++k) mv.m.push_back(moment(spec, k));
  return mv;
}

double sample(const HazardSpec& spec, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("sample: u must lie in (0, 1)");
  const double target = -std::log1p(-u);
  const auto& knots = spec.knots();
  const auto& rates = spec.rates();
  const auto& atoms = spec.atoms();

  double atom_sum = 0.0;
  std::size_t next_atom = 0;
  // Walk knot segments, interleaving the atoms that fall inside them.
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double t0 = knots[i];
    const double t1 = knots[i + 1];
    const double slope = (rates[i + 1] - rates[i]) / (t1 - t0);
    double from = t0;
    while (true) {
      const bool atom_inside = next_atom < atoms.size() && atoms[next_atom].location <= t1;
      const double to = atom_inside ? atoms[next_atom].location : t1;
      const double base = spec.cumulative(from) + atom_sum;
      const double top = spec.cumulative(to) + atom_sum;
      if (top >= target) {
        // Solve r0 x + slope x^2 / 2 = need on [from, to].
        const double r0 = spec.rate(from);
        const double need = target - base;
        double x = 0.0;
        if (need > 0.0) {
          const double disc = r0 * r0 + 2.0 * slope * need;
          x = 2.0 * need / (r0 + std::sqrt(std::max(0.0, disc)));
        }
        return std::min(from + x, to);
      }
      if (!atom_inside) break;
      atom_sum += atoms[next_atom].weight;
      ++next_atom;
      if (top + atoms[next_atom - 1].weight >= target) return to;
      from = to;
    }
  }
  // Constant tail, possibly with atoms beyond the last knot.
  double from = knots.back();
  while (true) {
    const double base = spec.cumulative(from) + atom_sum;
    if (next_atom < atoms.size()) {
      const double to = atoms[next_atom].location;
      const double top = spec.cumulative(to) + atom_sum;
      if (top >= target) return from + (target - base) / spec.tail_rate();
      atom_sum += atoms[next_atom].weight;
      ++next_atom;
      if (top + atoms[next_atom - 1].weight >= target) return to;
      from = to;
    } else {
      return from + std::max(0.0, target - base) / spec.tail_rate();
    }
  }
}

HazardSpec residual(const HazardSpec& spec, double elapsed) {
  if (!(elapsed >= 0.0)) throw std::domain_error("residual: elapsed must be >= 0");
  if (elapsed == 0.0) return spec;
  std::vector<Atom> atoms;
  for (const Atom& a : spec.atoms()) {
    if (a.location > elapsed) atoms.push_back({a.location - elapsed, a.weight});
  }
  const auto& knots = spec.knots();
  if (elapsed >= knots.back()) {
    return HazardSpec({0.0}, {spec.tail_rate()}, spec.tail_rate(), std::move(atoms));
  }
  std::vector<double> new_knots{0.0};
  std::vector<double> new_rates{spec.rate(elapsed)};
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (knots[i] > elapsed) {
      new_knots.push_back(knots[i] - elapsed);
      new_rates.push_back(spec.rates()[i]);
    }
  }
  return HazardSpec(std::move(new_knots), std::move(new_rates), spec.tail_rate(),
                    std::move(atoms));
}

double overlap(const HazardSpec& a, const HazardSpec& b) {
  std::vector<double> cuts = a.breakpoints();
  for (double p : b.breakpoints()) cuts.push_back(p);
  merge_sorted_unique(cuts);
  const double T = cuts.back();

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate(
        [&](double t) { return std::min(density(a, t), density(b, t)); },
        cuts[i], cuts[i + 1], 1e-10, 1e-13);
  }

  // Beyond T both densities are c_i exp(-l_i s); integrate their minimum in
  // closed form.
  const double la = a.tail_rate();
  const double lb = b.tail_rate();
  const double ca = la * survival(a, T);
  const double cb = lb * survival(b, T);
  auto mass = [](double c, double l, double s0, double s1) {
    // int_{s0}^{s1} c exp(-l s) ds
    const double hi = std::isinf(s1) ? 0.0 : std::exp(-l * s1);
    return c / l * (std::exp(-l * s0) - hi);
  };
  if (ca > 0.0 && cb > 0.0 && la != lb) {
    const double cross = std::log(ca / cb) / (la - lb);
    // The function with the smaller value at s = 0 is the minimum first.
    const bool a_first = ca < cb || (ca == cb && la > lb);
    if (cross > 0.0) {
      total += a_first ? mass(ca, la, 0.0, cross) + mass(cb, lb, cross, kInf)
                       : mass(cb, lb, 0.0, cross) + mass(ca, la, cross, kInf);
    } else {
      // No crossing on s > 0: the function with the faster decay stays below.
      total += la > lb ? mass(ca, la, 0.0, kInf) : mass(cb, lb, 0.0, kInf);
    }
  } else if (la == lb) {
    total += mass(std::min(ca, cb), la, 0.0, kInf);
  }

  for (const Atom& at : a.atoms()) {
    if (b.atom_weight_at(at.location) > 0.0) {
      total += std::min(atom_mass(a, at.location), atom_mass(b, at.location));
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

HazardSpec blend(const HazardSpec& a, const HazardSpec& b, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("blend: w must lie in [0, 1]");
  std::vector<double> knots(a.knots());
  knots.insert(knots.end(), b.knots().begin(), b.knots().end());
  merge_sorted_unique(knots);
  const double last = knots.back();

  std::vector<double> rates(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double q = knots[i];
    if (q == last && knots.size() > 1) {
      rates[i] = (1.0 - w) * left_limit(a, q) + w * left_limit(b, q);
      continue;
    }
    if (i > 0) {
      for (const HazardSpec* s : {&a, &b}) {
        if (left_limit(*s, q) != s->rate(q)) {
          throw std::invalid_argument("blend: component jumps at an interior knot");
        }
      }
    }
    rates[i] = (1.0 - w) * a.rate(q) + w * b.rate(q);
  }

  std::vector<double> locs;
  for (const Atom& at : a.atoms()) locs.push_back(at.location);
  for (const Atom& at : b.atoms()) locs.push_back(at.location);
  merge_sorted_unique(locs);
  std::vector<Atom> atoms;
  for (double loc : locs) {
    const double wt = (1.0 - w) * a.atom_weight_at(loc) + w * b.atom_weight_at(loc);
    if (wt > 0.0) atoms.push_back({loc, wt});
  }
  return HazardSpec(std::move(knots), std::move(rates),
                    (1.0 - w) * a.tail_rate() + w * b.tail_rate(), std::move(atoms));
}

HazardSpec scaled(const HazardSpec& spec, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
  std::vector<double> rates(spec.rates());
  for (double& r : rates) r *= factor;
  std::vector<Atom> atoms(spec.atoms());
  for (Atom& at : atoms) at.weight *= factor;
  return HazardSpec(spec.knots(), std::move(rates), spec.tail_rate() * factor,
                    std::move(atoms));
}

std::optional<double> ordering_violation(const HazardSpec& lo, const HazardSpec& hi,
                                         double tol) {
  auto exceeds = [tol](double x, double y) { return x > y + tol * (1.0 + std::abs(y)); };
  std::vector<double> knots(lo.knots());
  knots.insert(knots.end(), hi.knots().begin(), hi.knots().end());
  merge_sorted_unique(knots);
  for (double q : knots) {
    if (exceeds(lo.rate(q), hi.rate(q))) return q;
    if (q > 0.0 && exceeds(left_limit(lo, q), left_limit(hi, q))) return q;
  }
  if (exceeds(lo.tail_rate(), hi.tail_rate())) return knots.back();
  for (const Atom& at : lo.atoms()) {
    if (exceeds(at.weight, hi.atom_weight_at(at.location))) return at.location;
  }
  return std::nullopt;
}

std::string describe(const HazardSpec& spec) {
  std::ostringstream os;
  os << "hazard{knots=" << spec.knots().size() << ", last_knot=" << spec.last_knot()
     << ", tail_rate=" << spec.tail_rate() << ", atoms=" << spec.atoms().size() << "}";
  return os.str();
}

}  // namespace esq
