#include "esq/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "esq/random.hpp"
#include "oracles.hpp"

namespace {

using esq::Atom;
using esq::HazardSpec;

const double kLn2 = std::log(2.0);

HazardSpec piecewise() { return HazardSpec({0.0, 2.0}, {0.5, 1.5}, 1.5); }

HazardSpec atom_only() { return HazardSpec({0.0, 1.0}, {0.0, 0.0}, 1.0, {{1.0, kLn2}}); }

double piecewise_rate(double t) { return t < 2.0 ? 0.5 + 0.5 * t : 1.5; }

// Exact Gamma(2, 1) hazard t / (1 + t), sampled on a fine grid.
HazardSpec gamma2() {
  return HazardSpec::from_hazard_fn([](double t) { return t / (1.0 + t); }, 60.0, 1e-3);
}

TEST(HazardSpec, RejectsMalformedInput) {
  EXPECT_THROW(HazardSpec({0.0, 1.0}, {1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.5}, {1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0, 0.0}, {1.0, 1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0}, {-1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0}, {1.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0}, {1.0}, 1.0, {{0.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0}, {1.0}, 1.0, {{1.0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(HazardSpec({0.0}, {1.0}, 1.0, {{2.0, 1.0}, {1.0, 1.0}}), std::invalid_argument);
}

TEST(HazardSpec, RateIsRightContinuousAtLastKnot) {
  const HazardSpec h({0.0, 1.0}, {2.0, 4.0}, 0.5);
  EXPECT_DOUBLE_EQ(h.rate(0.5), 3.0);
  EXPECT_DOUBLE_EQ(h.rate(1.0), 0.5);
  EXPECT_DOUBLE_EQ(h.rate(7.0), 0.5);
  EXPECT_GE(h.max_rate(0.0, 2.0), 4.0 - 1e-12);
}

TEST(Survival, Exponential) {
  EXPECT_NEAR(esq::survival(HazardSpec::exponential(1.0), kLn2), 0.5, 1e-15);
}

TEST(Survival, PureAtom) {
  const HazardSpec h = atom_only();
  EXPECT_DOUBLE_EQ(esq::survival(h, 0.5), 1.0);
  EXPECT_NEAR(esq::survival(h, 1.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(esq::survival_left(h, 1.0), 1.0);
  EXPECT_NEAR(esq::atom_mass(h, 1.0), 0.5, 1e-15);
}

TEST(Survival, PiecewiseMatchesDenseQuadrature) {
  const double integral = oracle::trapezoid(piecewise_rate, 0.0, 3.0, 300000);
  EXPECT_NEAR(esq::survival(piecewise(), 3.0), std::exp(-integral), 1e-10);
}

TEST(Survival, NegativeTimeIsDomainError) {
  EXPECT_THROW(esq::survival(piecewise(), -1.0), std::domain_error);
}

TEST(Survival, MonotoneAndProper) {
  const HazardSpec h({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3, {{0.8, 0.4}, {2.0, 1.0}});
  double prev = 1.0;
  for (double t = 0.0; t < 80.0; t += 0.01) {
    const double s = esq::survival(h, t);
    ASSERT_LE(s, prev + 1e-15);
    ASSERT_GE(s, 0.0);
    prev = s;
  }
  EXPECT_DOUBLE_EQ(esq::survival(h, 0.0), 1.0);
  EXPECT_LT(esq::survival(h, 200.0), 1e-20);
}

TEST(Moment, Exponential) {
  const HazardSpec e1 = HazardSpec::exponential(1.0);
  EXPECT_NEAR(esq::moment(e1, 1), 1.0, 1e-12);
  EXPECT_NEAR(esq::moment(e1, 2), 2.0, 1e-12);
  EXPECT_NEAR(esq::moment(HazardSpec::exponential(4.0), 3), 6.0 / 64.0, 1e-14);
}

TEST(Moment, GammaFromExactHazard) {
  const HazardSpec g = gamma2();
  EXPECT_NEAR(esq::moment(g, 1), oracle::gamma_moment(2.0, 1.0, 1), 1e-4);
  EXPECT_NEAR(esq::moment(g, 2), oracle::gamma_moment(2.0, 1.0, 2), 1e-4);
}

TEST(Moment, FirstMomentEqualsSurvivalIntegral) {
  const HazardSpec h({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3, {{0.8, 0.4}});
  auto surv = [&](double t) { return esq::survival(h, t); };
  const std::vector<double> cuts{0.0, 0.5, 0.8, 1.0, 3.0};
  double direct = esq::survival(h, 3.0) / 0.3;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Stop just short of the cut: survival drops at the atom.
    direct += oracle::simpson(surv, cuts[i], std::nextafter(cuts[i + 1], 0.0), 20000);
  }
  EXPECT_NEAR(esq::moment(h, 1), direct, 1e-8);
}

TEST(Moment, DeterministicAndLyapunov) {
  const HazardSpec d = HazardSpec::deterministic(1.0);
  EXPECT_NEAR(esq::moment(d, 1), 1.0, 1e-12);
  EXPECT_NEAR(esq::moment(d, 2), 1.0, 1e-12);
  const auto m = esq::moments(piecewise(), 4);
  for (int k = 1; k < 4; ++k) {
    EXPECT_LE(std::pow(m[k], 1.0 / k), std::pow(m[k + 1], 1.0 / (k + 1)) + 1e-12);
  }
}

TEST(Sample, InverseTransform) {
  EXPECT_NEAR(esq::sample(HazardSpec::exponential(1.0), 1.0 - std::exp(-1.0)), 1.0, 1e-12);
}

TEST(Sample, AtomIsAPointMass) {
  const HazardSpec h = atom_only();
  // The CDF jumps from 0 to 1/2 at 1, so the whole range (0, 1/2] maps there.
  EXPECT_DOUBLE_EQ(esq::sample(h, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(esq::sample(h, 0.5), 1.0);
  // Beyond the jump the unit-rate tail takes over.
  EXPECT_NEAR(esq::sample(h, 0.6), 1.0 + std::log(1.25), 1e-12);
}

TEST(Sample, RejectsDegenerateUniforms) {
  EXPECT_THROW(esq::sample(piecewise(), 0.0), std::domain_error);
  EXPECT_THROW(esq::sample(piecewise(), 1.0), std::domain_error);
}

TEST(Sample, EmpiricalCdfWithinDkwBand) {
  const HazardSpec h({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3);
  esq::Rng rng(7);
  std::vector<double> xs(100000);
  for (double& x : xs) x = esq::sample(h, rng.uniform());
  const double d = oracle::ks_distance(xs, [&](double t) { return 1.0 - esq::survival(h, t); });
  EXPECT_LT(d, oracle::dkw(xs.size(), 0.01));
}

TEST(Residual, MemorylessIsIdentity) {
  const HazardSpec e = HazardSpec::exponential(2.5);
  EXPECT_EQ(esq::residual(e, 3.7), e);
}

TEST(Residual, DropsPassedAtoms) {
  const HazardSpec r = esq::residual(atom_only(), 1.5);
  EXPECT_TRUE(r.atoms().empty());
  const HazardSpec r2 = esq::residual(atom_only(), 0.25);
  ASSERT_EQ(r2.atoms().size(), 1u);
  EXPECT_NEAR(r2.atoms()[0].location, 0.75, 1e-15);
}

TEST(Residual, MatchesSurvivalRatio) {
  const HazardSpec h({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3, {{0.8, 0.4}, {2.0, 1.0}});
  const HazardSpec r = esq::residual(h, 0.7);
  for (double s : {0.0, 0.05, 0.1, 0.3, 1.0, 1.3, 2.5, 7.0}) {
    EXPECT_NEAR(esq::survival(r, s), esq::survival(h, 0.7 + s) / esq::survival(h, 0.7), 1e-10)
        << "s=" << s;
  }
}

TEST(Residual, ZeroElapsedReproducesSpec) {
  const HazardSpec h({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3, {{0.8, 0.4}});
  const HazardSpec r = esq::residual(h, 0.0);
  for (double t : {0.0, 0.3, 0.8, 1.7, 9.0}) {
    EXPECT_EQ(esq::survival(r, t), esq::survival(h, t));
    EXPECT_EQ(r.rate(t), h.rate(t));
  }
}

TEST(Overlap, IdenticalIsOne) {
  EXPECT_NEAR(esq::overlap(piecewise(), piecewise()), 1.0, 1e-8);
  EXPECT_NEAR(esq::overlap(atom_only(), atom_only()), 1.0, 1e-8);
}

TEST(Overlap, ExponentialPair) {
  // min density switches at ln 2: 1/2 + 1/4.
  const auto e1 = HazardSpec::exponential(1.0);
  const auto e2 = HazardSpec::exponential(2.0);
  EXPECT_NEAR(esq::overlap(e1, e2), 0.75, 1e-8);
  EXPECT_NEAR(esq::overlap(e2, e1), 0.75, 1e-8);
}

TEST(Overlap, MatchesDenseQuadrature) {
  const HazardSpec a({0.0, 1.0, 2.0}, {0.2, 1.4, 0.6}, 0.9);
  const HazardSpec b({0.0, 3.0}, {1.0, 0.1}, 0.5);
  auto diff = [&](double t) { return esq::density(a, t) - esq::density(b, t); };
  // min(fa, fb) has a kink wherever the densities cross; cut there too.
  std::vector<double> cuts{0.0, 1.0, 2.0, 3.0, 120.0};
  for (std::size_t i = 0; i + 1 < 4; ++i) {
    const double step = (cuts[i + 1] - cuts[i]) / 1000.0;
    for (int j = 0; j < 1000; ++j) {
      double lo = cuts[i] + j * step;
      double hi = lo + step;
      if ((diff(lo) > 0.0) == (diff(hi) > 0.0)) continue;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((diff(mid) > 0.0) == (diff(lo) > 0.0) ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double ref = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    ref += oracle::simpson(
        [&](double t) { return std::min(esq::density(a, t), esq::density(b, t)); }, cuts[i],
        std::nextafter(cuts[i + 1], 0.0), 200000);
  }
  EXPECT_NEAR(esq::overlap(a, b), ref, 1e-8);
}

TEST(Overlap, DisjointAtomsNearZero) {
  EXPECT_LT(esq::overlap(HazardSpec::deterministic(1.0), HazardSpec::deterministic(2.0)), 1e-12);
}

TEST(Overlap, BoundedAndSymmetric) {
  const HazardSpec a({0.0, 1.0}, {0.3, 0.9}, 0.9, {{0.5, 0.2}});
  const HazardSpec b({0.0, 2.0}, {1.2, 0.2}, 0.4, {{0.5, 0.7}});
  const double ab = esq::overlap(a, b);
  EXPECT_NEAR(ab, esq::overlap(b, a), 1e-12);
  EXPECT_GE(ab, 0.0);
  EXPECT_LE(ab, 1.0);
}

TEST(FromCdf, ExponentialRoundTrip) {
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(i * 0.005);
  const HazardSpec h =
      HazardSpec::from_cdf([](double t) { return -std::expm1(-1.3 * t); }, grid, 1.3);
  for (double t = 0.0; t <= 25.0; t += 0.37) {
    EXPECT_NEAR(1.0 - esq::survival(h, t), -std::expm1(-1.3 * t), 1e-8) << "t=" << t;
  }
}

TEST(FromCdf, JumpBecomesAtom) {
  // Half the mass at 1, the rest Exp(1) shifted past 1.
  auto F = [](double t) { return t < 1.0 ? 0.0 : 1.0 - 0.5 * std::exp(-(t - 1.0)); };
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(i * 0.01);
  const std::vector<double> jumps{1.0};
  const HazardSpec h = HazardSpec::from_cdf(F, grid, 1.0, jumps);
  ASSERT_EQ(h.atoms().size(), 1u);
  EXPECT_NEAR(h.atoms()[0].weight, kLn2, 1e-12);
  for (double t : {0.5, 1.0, 1.5, 3.0, 6.0}) EXPECT_NEAR(esq::cdf(h, t), F(t), 1e-8);
}

TEST(Blend, PointwiseCombination) {
  const auto a = HazardSpec::exponential(1.0);
  const auto b = HazardSpec::exponential(2.0);
  const HazardSpec m = esq::blend(a, b, 0.25);
  EXPECT_NEAR(m.rate(3.0), 1.25, 1e-15);
  EXPECT_FALSE(esq::ordering_violation(a, m));
  EXPECT_FALSE(esq::ordering_violation(m, b));
  EXPECT_TRUE(esq::ordering_violation(b, a));
}

TEST(Ordering, DetectsAtomExcess) {
  const HazardSpec lo({0.0}, {1.0}, 1.0, {{1.0, 0.5}});
  const HazardSpec hi = HazardSpec::exponential(2.0);
  EXPECT_TRUE(esq::ordering_violation(lo, hi));
  EXPECT_FALSE(esq::ordering_violation(HazardSpec::exponential(1.0), lo));
}

}  // namespace
