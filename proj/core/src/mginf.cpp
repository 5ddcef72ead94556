#include "esq/mginf.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <fftw3.h>

#include "esq/stats.hpp"
#include "quadrature.hpp"

namespace esq {
namespace {


// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Trapezoid-rule self-convolution machinery on a fixed grid:
// (f * c)(x_i) ~= h [sum_{j=0}^{i} f_j c_{i-j} - (f_0 c_i + f_i c_0) / 2].
class TrapezoidConvolver {
 public:
  TrapezoidConvolver(const std::vector<double>& kernel, double step)
      : n_(kernel.size()), size_(2 * kernel.size()), step_(step), kernel_(kernel) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * size_));
    spectrum_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (size_ / 2 + 1)));
    kernel_spectrum_.resize(size_ / 2 + 1);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), real_, spectrum_, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(size_), spectrum_, real_, FFTW_ESTIMATE);
    }
    load(kernel);
    fftw_execute(forward_);
    for (std::size_t k = 0; k < size_ / 2 + 1; ++k) {
      kernel_spectrum_[k] = {spectrum_[k][0], spectrum_[k][1]};
    }
  }

  TrapezoidConvolver(const TrapezoidConvolver&) = delete;
  TrapezoidConvolver& operator=(const TrapezoidConvolver&) = delete;

  ~TrapezoidConvolver() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(backward_);
    }
    fftw_free(real_);
    fftw_free(spectrum_);
  }

  std::vector<double> convolve(const std::vector<double>& f) {
    load(f);
    fftw_execute(forward_);
    for (std::size_t k = 0; k < size_ / 2 + 1; ++k) {
      const std::complex<double> z =
          std::complex<double>(spectrum_[k][0], spectrum_[k][1]) * kernel_spectrum_[k];
      spectrum_[k][0] = z.real();
      spectrum_[k][1] = z.imag();
    }
    fftw_execute(backward_);
    std::vector<double> out(n_);
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double full = real_[i] * scale;
      out[i] = step_ * (full - 0.5 * (f[0] * kernel_[i] + f[i] * kernel_[0]));
    }
    return out;
  }

 private:
  void load(const std::vector<double>& f) {
    std::copy(f.begin(), f.end(), real_);
    std::fill(real_ + n_, real_ + size_, 0.0);
  }

  std::size_t n_;
  std::size_t size_;
  double step_;
  std::vector<double> kernel_;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  std::vector<std::complex<double>> kernel_spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

// int_0^inf f(t, G(t), S(t)) dt, with G the load and S the service survival.
// Up to the service horizon the load is carried piece by piece; past it both
// S and G have closed forms.
template <class F>
double integrate_load(const StandardSystem& sys, F&& f) {
  const HazardSpec& svc = sys.service();
  const double lambda = sys.arrival_rate();
  const std::vector<double> cuts = svc.breakpoints();

  double total = 0.0;
  double load = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    const double load_p = load;
    auto piece = [&](double t) {
      const double g = load_p + lambda * survival_integral(svc, p, t);
      return f(t, g, survival(svc, t));
    };
    total += detail::adaptive_gk(piece, p, q, 1e-12, 1e-15 * std::abs(total));
    load += lambda * survival_integral(svc, p, q);
  }

  const double T = cuts.back();
  const double s_T = survival(svc, T);
  const double mu = svc.tail_rate();
  if (s_T == 0.0) return total;
  boost::math::quadrature::exp_sinh<double> tail;
  total += tail.integrate(
      [&](double u) {
        const double decay = std::exp(-mu * u);
        if (decay == 0.0) return 0.0;
        const double g = load + lambda * s_T * (1.0 - decay) / mu;
        return f(T + u, g, s_T * decay);
      },
      0.0, std::numeric_limits<double>::infinity());
  return total;
}

// B on the grid 0, h, ..., n h.
BusyCdfTable tabulate(const StandardSystem& sys, double h, std::size_t n, double tol) {
  const HazardSpec& svc = sys.service();
  const double lambda = sys.arrival_rate();
  std::vector<double> kernel(n + 1);
  double load = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = h * static_cast<double>(i);
    if (i > 0) load += lambda * survival_integral(svc, x - h, x);
    kernel[i] = lambda * survival(svc, x) * std::exp(-load);
  }

  const double mass = kernel_mass(sys);
  std::size_t terms = 1;
  while (std::pow(mass, static_cast<double>(terms + 1)) / (1.0 - mass) >= tol) ++terms;

  std::vector<double> total(kernel);
  if (terms > 1) {
    TrapezoidConvolver conv(kernel, h);
    std::vector<double> power(kernel);
    for (std::size_t m = 2; m <= terms; ++m) {
      power = conv.convolve(power);
      for (std::size_t i = 0; i <= n; ++i) total[i] += power[i];
    }
  }

  BusyCdfTable table;
  table.step = h;
  table.terms = terms;
  table.values.resize(n + 1);
  double running = 0.0;
  double defect = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double b = std::clamp(1.0 - total[i] / lambda, 0.0, 1.0);
    defect = std::max(defect, running - b);
    running = std::max(running, b);
    table.values[i] = running;
  }
  if (defect > 1e-9) {
    table.warnings.push_back("monotonicity defect " + std::to_string(defect) +
                             " removed by running maximum");
  }
  return table;
}

}  // namespace

StandardSystem::StandardSystem(double arrival_rate, HazardSpec service)
    : arrival_rate_(arrival_rate), service_(std::move(service)) {
  if (!std::isfinite(arrival_rate_) || !(arrival_rate_ > 0.0)) {
    throw std::invalid_argument("standard system: arrival rate must be positive");
  }
  mean_service_ = moment(service_, 1);
}

double integrated_tail(const StandardSystem& sys, double t) {
  if (!(t >= 0.0)) throw std::domain_error("integrated_tail: t must be >= 0");
  return sys.arrival_rate() * survival_integral(sys.service(), 0.0, t);
}

double rho(const StandardSystem& sys) { return sys.arrival_rate() * sys.mean_service(); }

double kernel_mass(const StandardSystem& sys) { return -std::expm1(-rho(sys)); }

double transient_pmf(const StandardSystem& sys, double t, int k) {
  if (k < 0) throw std::domain_error("transient_pmf: k must be >= 0");
  const double g = integrated_tail(sys, t);
  if (g == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-g + k * std::log(g) - std::lgamma(k + 1.0));
}

double busy_kernel(const StandardSystem& sys, double x) {
  return sys.arrival_rate() * survival(sys.service(), x) * std::exp(-integrated_tail(sys, x));
}

double busy_kernel_integral(const StandardSystem& sys) {
  const double lambda = sys.arrival_rate();
  return integrate_load(sys, [lambda](double, double g, double s) {
    return lambda * s * std::exp(-g);
  });
}

double busy_kernel_moment(const StandardSystem& sys, int k) {
  if (k < 0) throw std::domain_error("busy_kernel_moment: k must be >= 0");
  const double lambda = sys.arrival_rate();
  const double raw = integrate_load(sys, [lambda, k](double t, double g, double s) {
    return std::pow(t, k) * lambda * s * std::exp(-g);
  });
  return raw / kernel_mass(sys);
}

double BusyCdfTable::at(double x) const {
  if (x <= 0.0) return values.front();
  const double pos = x / step;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

std::string BusyCdfTable::to_csv() const {
  std::string out = "x,B_x\n";
  char line[96];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", step * static_cast<double>(i), values[i]);
    out += line;
  }
  return out;
}

BusyCdfTable busy_cdf(const StandardSystem& sys, double grid_step, double x_max, double tol) {
  if (!(grid_step > 0.0)) throw std::domain_error("busy_cdf: grid_step must be positive");
  if (!(tol > 0.0 && tol < 1.0)) throw std::domain_error("busy_cdf: tol must lie in (0, 1)");
  if (!(x_max > grid_step)) throw std::domain_error("busy_cdf: x_max must exceed grid_step");
  const auto n = static_cast<std::size_t>(std::ceil(x_max / grid_step - 1e-9));

  BusyCdfTable coarse = tabulate(sys, grid_step, n, tol);
  const BusyCdfTable fine = tabulate(sys, 0.5 * grid_step, 2 * n, tol);
  for (std::size_t i = 0; i <= n; ++i) {
    coarse.grid_error = std::max(coarse.grid_error, std::abs(coarse.values[i] - fine.values[2 * i]));
  }
  coarse.tail_mass = 1.0 - coarse.values.back();
  if (coarse.tail_mass > tol + coarse.grid_error) {
    coarse.warnings.push_back("x_max too small: tail mass " + std::to_string(coarse.tail_mass) +
                              " beyond the grid");
  }
  return coarse;
}

double busy_laplace(const StandardSystem& sys, double s) {
  if (!(s > 0.0)) throw std::domain_error("busy_laplace: s must be positive");
  const double lambda = sys.arrival_rate();
  const double limit = std::exp(-rho(sys));
  // int e^{-st - G(t)} dt = e^{-rho}/s + int e^{-st} (e^{-G(t)} - e^{-rho}) dt;
  // the second integrand decays with the service tail, not with s.
  const double rest = integrate_load(sys, [s, limit](double t, double g, double) {
    return std::exp(-s * t) * (std::exp(-g) - limit);
  });
  const double inner = limit / s + rest;
  return 1.0 + s / lambda - 1.0 / (lambda * inner);
}

double busy_laplace_from_table(const BusyCdfTable& table, double s) {
  // int e^{-sx} dB(x) = 1 - s int e^{-sx} (1 - B(x)) dx.
  const double h = table.step;
  double acc = 0.0;
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    const double x = h * static_cast<double>(i);
    const double w = (i == 0 || i + 1 == table.values.size()) ? 0.5 : 1.0;
    acc += w * std::exp(-s * x) * (1.0 - table.values[i]);
  }
  return 1.0 - s * h * acc;
}

double busy_mean(const StandardSystem& sys) {
  return std::expm1(rho(sys)) / sys.arrival_rate();
}

double busy_moment_numeric(const BusyCdfTable& table, int n) {
  if (n < 1) throw std::domain_error("busy_moment_numeric: n must be >= 1");
  const double h = table.step;
  double acc = 0.0;
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    const double x = h * static_cast<double>(i);
    const double w = (i == 0 || i + 1 == table.values.size()) ? 0.5 : 1.0;
    acc += w * n * std::pow(x, n - 1) * (1.0 - table.values[i]);
  }
  return h * acc;
}

double busy_moment_numeric(const StandardSystem& sys, int n, double grid_step, double x_max,
                           double tol) {
  return busy_moment_numeric(busy_cdf(sys, grid_step, x_max, tol), n);
}

double polylog_sum(double x, int k) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("polylog_sum: x must lie in (0, 1)");
  if (k < 0) throw std::domain_error("polylog_sum: k must be >= 0");
  const double log_x = std::log(x);
  CompensatedSum sum;
  for (long n = 1;; ++n) {
    const double dn = static_cast<double>(n);
    const double term = std::exp(k * std::log(dn) + dn * log_x);
    sum.add(term);
    // Past the peak the term ratio q = ((n+1)/n)^k x decreases, so the tail
    // is at most term * q / (1 - q).
    const double q = std::pow((dn + 1.0) / dn, k) * x;
    if (q < 1.0 && term * q / (1.0 - q) < 1e-17 * sum.value()) break;
    if (n > 100000000) throw std::runtime_error("polylog_sum: no convergence");
  }
  return sum.value();
}

double busy_moment_bound(const StandardSystem& sys, int k) {
  if (k < 1) throw std::domain_error("busy_moment_bound: k must be >= 1");
  const double mass = kernel_mass(sys);
  return moment(sys.service(), k) / mass * polylog_sum(mass, k - 1);
}

}  // namespace esq
