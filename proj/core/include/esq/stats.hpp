#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace esq {

// Compensated (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double min = 0.0;
  double max = 0.0;

  double standard_error() const;
};

Summary summarize(std::span<const double> xs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Two-sided standard normal quantile for confidence `level` (0.99 -> 2.5758).
double normal_critical(double level);
Interval normal_ci(const Summary& s, double level);

// Dvoretzky-Kiefer-Wolfowitz half-width: P(sup |F_n - F| > eps) <= alpha.
double dkw_epsilon(std::size_t n, double alpha);

// sup_x |F_n(x) - F(x)| for a sample against a CDF, checking both one-sided
// limits at every sample point. `reference` must be right-continuous; the
// left limit is taken from `reference_left` when given.
double ecdf_sup_distance(std::vector<double> sample,
                         const std::function<double(double)>& reference,
                         const std::function<double(double)>& reference_left = {});

// max_s (F_y(s) - F_x(s)) over the pooled sample points for the strict
// empirical CDFs F(s) = #{v < s}/n; nonpositive when x is stochastically
// smaller than y in the sample.
double stochastic_order_excess(std::vector<double> x, std::vector<double> y);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  std::size_t cells = 0;
};

// Pearson goodness of fit. `probabilities[i]` is the model mass of cell i;
// trailing cells are pooled until every cell expects >= min_expected counts,
// and the residual mass 1 - sum(probabilities) joins the last cell.
ChiSquareResult chi_square_gof(std::span<const std::size_t> counts,
                               std::span<const double> probabilities,
                               double min_expected = 5.0);

}  // namespace esq
