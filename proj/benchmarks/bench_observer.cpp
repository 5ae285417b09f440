#include <benchmark/benchmark.h>

#include "luenid/observer.hpp"
#include "luenid/simulate.hpp"

using namespace luenid;

namespace {

CanonicalTheta plant() {
  Vector a(3), b(3);
  a << 3.59, 3.1675, 0.574814;
  b << -0.6864, -1.974368, -0.5479232;
  return {a, b};
}

ObserverSpec observer(double k) {
  ObserverSpec spec;
  spec.n = 3;
  spec.k = k;
  spec.lambda_tilde = uniform_lambda_tilde(11, 0.1);
  return spec;
}

void BM_TMap(benchmark::State& state) {
  const ObserverSpec spec = observer(10.0);
  const Vector x = Vector::LinSpaced(3, 0.1, 0.3);
  const Vector w = Vector::LinSpaced(11, -1.0, 1.0);
  const CanonicalTheta theta = plant();
  for (auto _ : state) benchmark::DoNotOptimize(t_map(x, theta, w, spec));
}
BENCHMARK(BM_TMap);

void BM_TStarExplicit(benchmark::State& state) {
  const ObserverSpec spec = observer(10.0);
  const Vector w = Vector::LinSpaced(11, -1.0, 1.0);
  const Vector z = t_map(Vector::LinSpaced(3, 0.1, 0.3), plant(), w, spec);
  for (auto _ : state) benchmark::DoNotOptimize(t_star_explicit(z, w, spec));
}
BENCHMARK(BM_TStarExplicit);

void BM_Rhs(benchmark::State& state) {
  const ObserverSpec spec = observer(10.0);
  const Vector x = Vector::LinSpaced(3, 0.1, 0.3);
  const Vector z = Vector::LinSpaced(11, 0.0, 1.0);
  const Vector w = Vector::LinSpaced(11, -1.0, 1.0);
  const CanonicalTheta theta = plant();
  for (auto _ : state) benchmark::DoNotOptimize(rhs(0.5, x, z, w, theta, 0.3, 0.2, spec));
}
BENCHMARK(BM_Rhs);

// one simulated second at the default step; the argument is record_every
void BM_IntegrateOneSecond(benchmark::State& state) {
  SimConfig cfg;
  cfg.theta_true = plant();
  cfg.input = make_multisine(11);
  cfg.horizon_s = 1.0;
  cfg.record_every = static_cast<int>(state.range(0));
  const ObserverSpec spec = observer(10.0);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(cfg, spec));
}
BENCHMARK(BM_IntegrateOneSecond)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
