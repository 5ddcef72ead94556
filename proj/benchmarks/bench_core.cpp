#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "esq/coupling.hpp"
#include "esq/hazard.hpp"
#include "esq/mginf.hpp"
#include "esq/random.hpp"
#include "esq/simulator.hpp"

namespace {

using esq::HazardSpec;

HazardSpec ramp() { return HazardSpec({0.0, 0.5, 1.0, 3.0}, {0.0, 2.0, 0.1, 0.7}, 0.3, {{0.8, 0.4}}); }

void BM_Survival(benchmark::State& state) {
  const HazardSpec h = ramp();
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(esq::survival(h, t));
    t = t > 5.0 ? 0.0 : t + 0.013;
  }
}
BENCHMARK(BM_Survival);

void BM_SampleInverse(benchmark::State& state) {
  const HazardSpec h = ramp();
  esq::Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(esq::sample(h, rng.uniform()));
}
BENCHMARK(BM_SampleInverse);

void BM_Moment(benchmark::State& state) {
  const HazardSpec h = ramp();
  for (auto _ : state) benchmark::DoNotOptimize(esq::moment(h, 3));
}
BENCHMARK(BM_Moment);

void BM_BusyCdf(benchmark::State& state) {
  const esq::StandardSystem sys(1.0, HazardSpec::exponential(1.0));
  const double step = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(esq::busy_cdf(sys, step, 40.0, 1e-6));
}
BENCHMARK(BM_BusyCdf)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_BusyLaplace(benchmark::State& state) {
  const esq::StandardSystem sys(1.0, HazardSpec::exponential(1.0));
  for (auto _ : state) benchmark::DoNotOptimize(esq::busy_laplace(sys, 0.5));
}
BENCHMARK(BM_BusyLaplace);

void BM_SimulateStandard(benchmark::State& state) {
  const auto m = esq::standard_model(static_cast<double>(state.range(0)), HazardSpec::exponential(1.0));
  std::uint64_t seed = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    const auto log = esq::simulate(m, 100.0, ++seed);
    events += static_cast<std::int64_t>(log.events.size());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateStandard)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SimulateStateDependent(benchmark::State& state) {
  esq::IntensityModel m;
  m.lambda_max = 1.2;
  m.lambda0 = HazardSpec({0.0, 2.0}, {0.6, 1.0}, 1.0);
  m.lambda_inf = 0.6;
  m.phi = HazardSpec::exponential(1.0);
  m.q = HazardSpec::exponential(2.0);
  m.arrival = esq::rules::ScaledHazardOfX0{m.lambda0, {1.0, 1.2, 3.0}};
  m.service = esq::rules::SandwichBlendService{2.0};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(esq::simulate(m, 100.0, ++seed).events.size());
}
BENCHMARK(BM_SimulateStateDependent)->Unit(benchmark::kMillisecond);

void BM_CoupledDraw(benchmark::State& state) {
  const HazardSpec a = HazardSpec::exponential(1.0);
  const HazardSpec b = HazardSpec::exponential(2.0);
  esq::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(esq::coupled_draw(a, b, rng));
}
BENCHMARK(BM_CoupledDraw);

void BM_KSeries(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(esq::k_series(static_cast<int>(state.range(0)), 0.3));
}
BENCHMARK(BM_KSeries)->DenseRange(1, 4);

void BM_SuccessProbability(benchmark::State& state) {
  const esq::StandardSystem sys(1.0, HazardSpec::exponential(1.0));
  const HazardSpec lambda0({0.0, 2.0}, {0.6, 1.0}, 1.0);
  const esq::HazardSandwich sandwich{lambda0, HazardSpec::exponential(1.2)};
  for (auto _ : state) benchmark::DoNotOptimize(esq::success_probability(sys, lambda0, sandwich));
}
BENCHMARK(BM_SuccessProbability)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
