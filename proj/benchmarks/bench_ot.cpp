#include <benchmark/benchmark.h>

#include "torusot/densities.hpp"
#include "torusot/ot.hpp"

using namespace torusot;

namespace {

void bm_exact_circle(benchmark::State& state) {
  std::int64_t n = state.range(0);
  DensitySpec f = uniform_density(1);
  DiscreteMeasure a = to_discrete(sample(f, n, 11));
  DiscreteMeasure b = to_discrete(sample(f, n, 12));
  for (auto _ : state) benchmark::DoNotOptimize(exact_wasserstein(a, b, 2.0).wasserstein);
}
BENCHMARK(bm_exact_circle)->Arg(256)->Arg(1024)->Arg(4096);

void bm_exact_simplex(benchmark::State& state) {
  std::int64_t n = state.range(0);
  DensitySpec f = uniform_density(2);
  DiscreteMeasure a = to_discrete(sample(f, n, 21));
  DiscreteMeasure b = to_discrete(sample(f, n, 22));
  for (auto _ : state) benchmark::DoNotOptimize(exact_wasserstein(a, b, 2.0).wasserstein);
}
BENCHMARK(bm_exact_simplex)->Arg(32)->Arg(64)->Arg(128);

void bm_entropic_grid(benchmark::State& state) {
  std::int64_t n = state.range(0);
  int grid_n = static_cast<int>(state.range(1));
  DensitySpec f = uniform_density(2);
  EmpiricalMeasure s = sample(f, n, 31);
  Grid grid(2, grid_n);
  for (auto _ : state) {
    EmpiricalDistanceResult r =
        empirical_vs_density_wasserstein(s, f, grid, 2.0, SolverKind::entropic, 0.01);
    benchmark::DoNotOptimize(r.ot.wasserstein);
  }
}
BENCHMARK(bm_entropic_grid)->Args({256, 64})->Args({1024, 128});

}  // namespace
