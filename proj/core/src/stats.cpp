#include "esq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace esq {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

double Summary::standard_error() const {
  return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
}

Summary summarize(std::span<const double> xs) {
  Summary s;
  if (xs.empty()) return s;
  s.min = xs.front();
  s.max = xs.front();
  double mean = 0.0;
  double m2 = 0.0;
  for (double x : xs) {
    ++s.n;
    const double d = x - mean;
    mean += d / static_cast<double>(s.n);
    m2 += d * (x - mean);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = mean;
  s.variance = s.n > 1 ? m2 / static_cast<double>(s.n - 1) : 0.0;
  return s;
}

double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::domain_error("normal_critical: level in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
}

Interval normal_ci(const Summary& s, double level) {
  const double half = normal_critical(level) * s.standard_error();
  return {s.mean - half, s.mean + half};
}

double dkw_epsilon(std::size_t n, double alpha) {
  if (n == 0) throw std::domain_error("dkw_epsilon: empty sample");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

double ecdf_sup_distance(std::vector<double> sample,
                         const std::function<double(double)>& reference,
                         const std::function<double(double)>& reference_left) {
  if (sample.empty()) throw std::domain_error("ecdf_sup_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) ++j;
    const double x = sample[i];
    const double f = reference(x);
    const double f_left = reference_left ? reference_left(x) : f;
    d = std::max(d, std::abs(static_cast<double>(j) / n - f));
    d = std::max(d, std::abs(static_cast<double>(i) / n - f_left));
    i = j;
  }
  return d;
}

double stochastic_order_excess(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw std::domain_error("stochastic_order_excess: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::vector<double> points(x);
  points.insert(points.end(), y.begin(), y.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  double worst = -1.0;
  for (double s : points) {
    // Strict CDFs at s and just above s.
    const auto fx_lt = static_cast<double>(std::lower_bound(x.begin(), x.end(), s) - x.begin());
    const auto fy_lt = static_cast<double>(std::lower_bound(y.begin(), y.end(), s) - y.begin());
    const auto fx_le = static_cast<double>(std::upper_bound(x.begin(), x.end(), s) - x.begin());
    const auto fy_le = static_cast<double>(std::upper_bound(y.begin(), y.end(), s) - y.begin());
    worst = std::max(worst, fy_lt / ny - fx_lt / nx);
    worst = std::max(worst, fy_le / ny - fx_le / nx);
  }
  return worst;
}

ChiSquareResult chi_square_gof(std::span<const std::size_t> counts,
                               std::span<const double> probabilities,
                               double min_expected) {
  if (counts.size() != probabilities.size() || counts.empty()) {
    throw std::invalid_argument("chi_square_gof: counts and probabilities must match");
  }
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  double mass = 0.0;
  for (double p : probabilities) mass += p;

  std::vector<double> obs;
  std::vector<double> exp;
  double o_acc = 0.0;
  double e_acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    o_acc += static_cast<double>(counts[i]);
    e_acc += probabilities[i] * total;
    if (i + 1 == counts.size()) e_acc += std::max(0.0, 1.0 - mass) * total;
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = 0.0;
      e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }

  ChiSquareResult r;
  r.cells = obs.size();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.dof = static_cast<int>(obs.size()) - 1;
  if (r.dof < 1) {
    r.p_value = 1.0;
    return r;
  }
  r.p_value = boost::math::cdf(boost::math::complement(
      boost::math::chi_squared(static_cast<double>(r.dof)), r.statistic));
  return r;
}

}  // namespace esq
