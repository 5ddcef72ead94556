#include "esq/coupling.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "esq/errors.hpp"
#include "esq/stats.hpp"
#include "models.hpp"
#include "oracles.hpp"

namespace {

using esq::HazardSpec;
using esq::SystemState;

const double kE = std::numbers::e;

esq::IntensityModel mm1() { return esq::standard_model(1.0, HazardSpec::exponential(1.0)); }

// Increasing idle hazard: residuals differ from the fresh law.
HazardSpec ramp() { return HazardSpec({0.0, 3.0}, {0.2, 2.0}, 2.0); }

TEST(CoupledDraw, IdenticalLawsAlwaysCouple) {
  const auto draws = esq::coupled_draws(ramp(), ramp(), 2000, 1);
  for (const auto& d : draws) {
    ASSERT_TRUE(d.coupled);
    ASSERT_EQ(d.a, d.b);
  }
}

TEST(CoupledDraw, ExponentialPair) {
  const auto e1 = HazardSpec::exponential(1.0);
  const auto e2 = HazardSpec::exponential(2.0);
  const auto draws = esq::coupled_draws(e1, e2, 100000, 2);
  std::vector<double> a;
  std::vector<double> b;
  std::size_t coupled = 0;
  for (const auto& d : draws) {
    a.push_back(d.a);
    b.push_back(d.b);
    if (d.coupled) {
      ++coupled;
      ASSERT_EQ(d.a, d.b);
    }
  }
  EXPECT_NEAR(static_cast<double>(coupled) / 1e5, 0.75, 0.01);
  const double band = oracle::dkw(a.size(), 0.01);
  EXPECT_LT(oracle::ks_distance(a, [](double t) { return -std::expm1(-t); }), band);
  EXPECT_LT(oracle::ks_distance(b, [](double t) { return -std::expm1(-2.0 * t); }), band);
}

TEST(CoupledDraw, AtomsKeepMarginals) {
  const HazardSpec fa({0.0}, {1.0}, 1.0, {{0.5, 0.7}});
  const HazardSpec fb({0.0}, {0.5}, 0.5, {{0.5, 0.2}});
  const auto draws = esq::coupled_draws(fa, fb, 50000, 3);
  std::vector<double> a;
  std::vector<double> b;
  std::size_t coupled = 0;
  for (const auto& d : draws) {
    a.push_back(d.a);
    b.push_back(d.b);
    coupled += d.coupled;
  }
  const double band = esq::dkw_epsilon(a.size(), 0.01);
  auto cdf_of = [](const HazardSpec& h) { return [&h](double t) { return esq::cdf(h, t); }; };
  auto left_of = [](const HazardSpec& h) {
    return [&h](double t) { return 1.0 - esq::survival_left(h, t); };
  };
  EXPECT_LT(esq::ecdf_sup_distance(a, cdf_of(fa), left_of(fa)), band);
  EXPECT_LT(esq::ecdf_sup_distance(b, cdf_of(fb), left_of(fb)), band);
  const double kappa = esq::overlap(fa, fb);
  const double p = static_cast<double>(coupled) / 50000.0;
  EXPECT_GE(p, kappa - 3.0 * std::sqrt(kappa * (1 - kappa) / 50000.0));
}

TEST(Pi0, Values) {
  EXPECT_NEAR(esq::pi0(esq::StandardSystem(1.0, HazardSpec::exponential(1.0))), std::exp(-1.0),
              1e-12);
  EXPECT_NEAR(esq::pi0(esq::StandardSystem(1e-9, HazardSpec::exponential(1.0))), 1.0, 1e-8);
}

TEST(Pi0, BelowSimulatedEmptyProbability) {
  const auto m = mm1();
  const double p0 = esq::pi0(m.dominating_system());
  const std::vector<double> ts{0.5, 1.0, 3.0, 10.0};
  const std::size_t reps = 20000;
  std::vector<std::size_t> empty(ts.size(), 0);
  for (std::size_t r = 0; r < reps; ++r) {
    esq::Simulation sim(m, SystemState::empty(), esq::stream_seed(5, r));
    std::vector<esq::Event> ev;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sim.run_until(ts[i], ev);
      empty[i] += sim.n() == 0;
    }
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double p = static_cast<double>(empty[i]) / reps;
    EXPECT_GE(p, p0 - 3.0 * std::sqrt(p * (1 - p) / reps)) << "t=" << ts[i];
  }
}

TEST(Pi1, MemorylessAndZeroWindow) {
  EXPECT_NEAR(esq::pi1(HazardSpec::exponential(0.7), 5.0), 1.0, 1e-8);
  EXPECT_EQ(esq::pi1(ramp(), 0.0), 1.0);
}

TEST(Pi1, MatchesDenseGrid) {
  const HazardSpec h = ramp();
  const double brute = oracle::grid_min(
      [&](double a) { return esq::overlap(esq::residual(h, a), h); }, 0.0, 2.0, 4096);
  EXPECT_NEAR(esq::pi1(h, 2.0), brute, 1e-3);
}

TEST(SuccessProbability, MemorylessLimit) {
  const esq::StandardSystem sys(1.0, HazardSpec::exponential(1.0));
  const esq::HazardSandwich s{HazardSpec::exponential(1.0), HazardSpec::exponential(1.0)};
  const auto far = esq::success_probability(sys, HazardSpec::exponential(1.0), s, 1e9);
  EXPECT_NEAR(far.pi, std::exp(-1.0), 1e-8);
  const auto at = esq::success_probability(sys, HazardSpec::exponential(1.0), s, 2.0);
  EXPECT_EQ(at.pi, 0.0);
  EXPECT_FALSE(at.diagnostic.empty());
}

TEST(SuccessProbability, OptimizerBeatsBaseline) {
  for (const auto& m : {mm1(), models::ramp_blend(), models::atom_scaled()}) {
    const auto sys = m.dominating_system();
    const auto sandwich = esq::arrival_sandwich(m);
    const auto opt = esq::success_probability(sys, m.lambda0, sandwich);
    const auto base = esq::success_probability(sys, m.lambda0, sandwich, 2.0 * opt.theta0);
    EXPECT_GE(opt.pi, base.pi);
    EXPECT_GT(opt.theta, opt.theta0);
    EXPECT_LE(opt.pi, opt.pi0);
  }
}

TEST(KSeries, ClosedForms) {
  const auto a = esq::k_series(1, 0.5);
  EXPECT_NEAR(a.K0, 2.0, 1e-12);
  EXPECT_NEAR(a.K, 4.0, 1e-12);
  const auto b = esq::k_series(2, 0.5);
  EXPECT_NEAR(b.K0, 4.0, 1e-9);
  EXPECT_NEAR(b.K, 12.0, 1e-9);
  const auto c = esq::k_series(3, 1.0);
  EXPECT_EQ(c.K0, 1.0);
  EXPECT_EQ(c.K, 1.0);
  EXPECT_THROW(esq::k_series(2, 0.0), esq::DivergenceError);
}

TEST(KSeries, MatchesPartialSums) {
  for (double pi : {0.05, 0.3, 0.9}) {
    for (int k = 1; k <= 4; ++k) {
      const auto s = esq::k_series(k, pi);
      const double r0 = oracle::geometric_power_series(pi, k - 1, 1000000);
      const double r1 = oracle::geometric_power_series(pi, k, 1000000);
      EXPECT_NEAR(s.K0, r0, 1e-9 * std::max(1.0, r0)) << pi << " " << k;
      EXPECT_NEAR(s.K, r1, 1e-9 * std::max(1.0, r1)) << pi << " " << k;
      EXPECT_LE(s.K0, s.K);
    }
  }
}

TEST(RegenBound, ExponentialCases) {
  EXPECT_NEAR(esq::regen_moment_bound(mm1(), 1), 1.0 + kE, 1e-9);
  EXPECT_NEAR(esq::regen_moment_bound(mm1(), 2), 2.0 * (2.0 + 14.778), 2e-3);
  auto fast_idle = mm1();
  fast_idle.lambda_inf = 1e9;
  EXPECT_NEAR(esq::regen_moment_bound(fast_idle, 2),
              2.0 * esq::busy_moment_bound(fast_idle.dominating_system(), 2), 1e-6);
}

TEST(RegenBound, DominatesSimulatedCycles) {
  for (const auto& m : {mm1(), models::ramp_blend()}) {
    const auto rep = esq::sample_regenerations(m, 20000, 4);
    for (int k = 1; k <= 2; ++k) {
      EXPECT_LE(rep.r_moments[k - 1].mean, esq::regen_moment_bound(m, k)) << k;
    }
  }
}

TEST(TauBound, Values) {
  EXPECT_NEAR(esq::tau_moment_bound(1, 0.5, 1.0, 1.0), 6.0, 1e-12);
  EXPECT_NEAR(esq::tau_moment_bound(2, 1.0, 3.0, 4.0), 7.0, 1e-12);
  EXPECT_THROW(esq::tau_moment_bound(2, 0.0, 1.0, 1.0), esq::NoCouplingError);
  double prev = esq::tau_moment_bound(2, 0.1, 1.0, 2.0);
  for (double pi = 0.2; pi <= 1.0; pi += 0.1) {
    const double v = esq::tau_moment_bound(2, pi, 1.0, 2.0);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_LE(esq::tau_moment_bound(2, 0.4, 1.0, 2.0), esq::tau_moment_bound(2, 0.4, 1.5, 2.0));
  EXPECT_LE(esq::tau_moment_bound(2, 0.4, 1.0, 2.0), esq::tau_moment_bound(2, 0.4, 1.0, 2.5));
}

TEST(TauBound, DominatesPairedSimulation) {
  const auto m = mm1();
  const SystemState loaded{0.0, {1.0, 0.5, 0.0}};
  std::vector<double> tau;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    const auto run = esq::simulate_coupling_time(m, SystemState::empty(), loaded, r);
    ASSERT_TRUE(std::isfinite(run.tau));
    ASSERT_GE(run.attempts, 1u);
    tau.push_back(run.tau);
  }
  esq::PlanOptions opt;
  opt.k = 1;
  opt.er0_states = {SystemState::empty(), loaded};
  opt.er0_reps = 4000;
  const auto plan = esq::build_plan(m, opt);
  EXPECT_LE(esq::summarize(tau).mean, plan.bound_constant);
}

TEST(Plan, InvariantsAndProvenance) {
  esq::PlanOptions opt;
  opt.er0_reps = 2000;
  const auto plan = esq::build_plan(models::ramp_blend(), opt);
  EXPECT_GT(plan.pi, 0.0);
  EXPECT_LE(plan.pi, plan.pi0);
  EXPECT_LE(plan.pi0, 1.0);
  EXPECT_GT(plan.theta, plan.theta0);
  EXPECT_LE(plan.K0, plan.K);
  EXPECT_EQ(plan.er0_provenance, esq::Provenance::Empirical);
  EXPECT_NEAR(plan.bound_constant, plan.K0 * plan.er0_k + plan.K * plan.er1_k,
              1e-12 * plan.bound_constant);

  opt.er0_k = 5.0;
  const auto given = esq::build_plan(models::ramp_blend(), opt);
  EXPECT_EQ(given.er0_provenance, esq::Provenance::Analytic);
  EXPECT_EQ(given.er0_k, 5.0);
}

TEST(Plan, BetterInputsNeverIncreaseConstant) {
  esq::PlanOptions opt;
  opt.er0_k = 4.0;
  auto m = models::ramp_blend();
  const auto base = esq::build_plan(m, opt);
  // A faster lower idle hazard shrinks theta0 and raises lambda_inf.
  m.lambda0 = HazardSpec({0.0, 2.0}, {0.8, 1.0}, 1.0);
  m.lambda_inf = 0.8;
  m.arrival = esq::rules::ScaledHazardOfX0{m.lambda0, {1.0, 1.2, 3.0}};
  const auto better = esq::build_plan(m, opt);
  EXPECT_LE(better.theta0, base.theta0);
  EXPECT_LE(better.bound_constant, base.bound_constant);
}

TEST(TvBound, ClampAndPowerLaw) {
  esq::CouplingPlan plan;
  plan.k = 2;
  plan.bound_constant = 10.0;
  EXPECT_EQ(esq::tv_bound(plan, 1.0), 2.0);
  EXPECT_NEAR(esq::tv_bound(plan, 100.0), 2e-3, 1e-15);
  EXPECT_NEAR(esq::tv_bound(plan, 200.0) * 4.0, esq::tv_bound(plan, 100.0), 1e-15);
  EXPECT_LT(esq::tv_bound(plan, 1e8), 1e-14);
  EXPECT_THROW(esq::tv_bound(plan, 0.0), std::domain_error);
}

}  // namespace
