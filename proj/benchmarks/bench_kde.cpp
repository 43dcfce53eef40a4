#include <benchmark/benchmark.h>

#include "torusot/densities.hpp"
#include "torusot/kernel.hpp"

using namespace torusot;

namespace {

void bm_kde(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  int grid_n = static_cast<int>(state.range(1));
  bool spectral = state.range(2) != 0;
  DensitySpec f = uniform_density(d);
  EmpiricalMeasure s = sample(f, 512, 41);
  Grid grid(d, grid_n);
  const KernelSpec& kernel = bump_kernel(d);
  Bandwidth h(0.1);
  KdeMethod method = spectral ? KdeMethod::spectral : KdeMethod::direct;
  for (auto _ : state) {
    GridField field = kde_field(s, kernel, h, grid, method);
    benchmark::DoNotOptimize(field.values.data());
  }
}
BENCHMARK(bm_kde)
    ->Args({1, 1024, 0})
    ->Args({1, 1024, 1})
    ->Args({2, 128, 0})
    ->Args({2, 128, 1})
    ->Args({3, 32, 1});

void bm_smoothed_density(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  int grid_n = static_cast<int>(state.range(1));
  std::vector<DensityMode> modes = {{{1, 1, 0}, 0.4, 0.7}};
  for (DensityMode& mode : modes) {
    for (int k = d; k < kMaxDim; ++k) mode.m[k] = 0;
  }
  DensitySpec f = cosine_mixture_density(d, modes);
  Grid grid(d, grid_n);
  for (auto _ : state) {
    GridField field = smoothed_density_field(f, Bandwidth(0.1), grid);
    benchmark::DoNotOptimize(field.values.data());
  }
}
BENCHMARK(bm_smoothed_density)->Args({1, 1024})->Args({2, 128})->Args({3, 32});

}  // namespace
