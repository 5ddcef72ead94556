#pragma once

#include <algorithm>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace esq::detail {

// Adaptive 15/31-point Gauss-Kronrod by bisection. A piece is accepted when
// its error estimate is below max(rel * L1, abs); the absolute floor keeps
// roundoff on negligible pieces from forcing full-depth recursion.
template <class F>
double adaptive_gk(F& f, double a, double b, double rel, double abs, unsigned depth = 15) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &l1);
  // Boost reports the error on the [-1, 1] scale; L1 is already mapped back.
  err *= 0.5 * (b - a);
  if (depth == 0 || err <= std::max(rel * l1, abs)) return v;
  const double m = 0.5 * (a + b);
  return adaptive_gk(f, a, m, rel, 0.5 * abs, depth - 1) +
         adaptive_gk(f, m, b, rel, 0.5 * abs, depth - 1);
}

}  // namespace esq::detail
