#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "esq/hazard.hpp"

namespace esq {

// The standard M|G|inf system: Poisson(arrival_rate) input, i.i.d. service
// times with the given hazard, infinitely many servers.
class StandardSystem {
 public:
  StandardSystem(double arrival_rate, HazardSpec service);

  double arrival_rate() const { return arrival_rate_; }
  const HazardSpec& service() const { return service_; }
  double mean_service() const { return mean_service_; }

 private:
  double arrival_rate_;
  HazardSpec service_;
  double mean_service_;
};

// Load G(t) = Lambda int_0^t (1 - Phi0(s)) ds.
double integrated_tail(const StandardSystem& sys, double t);
// rho = Lambda m1, the limit of the load.
double rho(const StandardSystem& sys);
// 1 - exp(-rho): the total mass of the busy-period kernel c.
double kernel_mass(const StandardSystem& sys);
// P{m_t = k} for the system started empty: Poisson(G(t)).
double transient_pmf(const StandardSystem& sys, double t, int k);

// Busy-period kernel c(x) = Lambda (1 - Phi0(x)) exp(-G(x)).
double busy_kernel(const StandardSystem& sys, double x);
// int_0^inf c(s) ds by quadrature (equals kernel_mass analytically).
double busy_kernel_integral(const StandardSystem& sys);
// E s^k under the normalized kernel density r = c / kernel_mass.
double busy_kernel_moment(const StandardSystem& sys, int k);

struct BusyCdfTable {
  double step = 0.0;
  std::vector<double> values;  // B(i * step)
  std::size_t terms = 0;       // convolution powers summed
  double grid_error = 0.0;     // sup |B_h - B_{h/2}| on the coarse grid
  double tail_mass = 0.0;      // 1 - B(x_max)
  std::vector<std::string> warnings;

  double x_max() const { return step * static_cast<double>(values.size() - 1); }
  // Linear interpolation; the last tabulated value beyond x_max.
  double at(double x) const;
  std::string to_csv() const;
};

// B(x) = 1 - (1/Lambda) sum_{n>=1} c^{n*}(x) on the grid 0, h, ..., x_max.
// Convolutions use the trapezoid rule (evaluated with FFTs); the series stops
// at the first N with kernel_mass^{N+1} / (1 - kernel_mass) < tol.
BusyCdfTable busy_cdf(const StandardSystem& sys, double grid_step, double x_max,
                      double tol);

// Laplace-Stieltjes transform of the busy period:
// 1 + s/Lambda - 1 / (Lambda int_0^inf exp(-s t - G(t)) dt).
double busy_laplace(const StandardSystem& sys, double s);
// int e^{-s x} dB(x) from a tabulated CDF.
double busy_laplace_from_table(const BusyCdfTable& table, double s);

// E zeta = (exp(rho) - 1) / Lambda.
double busy_mean(const StandardSystem& sys);

// E zeta^n = int n x^{n-1} (1 - B(x)) dx over the tabulated CDF.
double busy_moment_numeric(const BusyCdfTable& table, int n);
double busy_moment_numeric(const StandardSystem& sys, int n, double grid_step,
                           double x_max, double tol);

// sum_{n>=1} n^k x^n for 0 < x < 1 and k >= 0.
double polylog_sum(double x, int k);

// (E xi^k / kernel_mass) * polylog_sum(kernel_mass, k - 1), an upper bound on
// E zeta^k.
double busy_moment_bound(const StandardSystem& sys, int k);

}  // namespace esq
