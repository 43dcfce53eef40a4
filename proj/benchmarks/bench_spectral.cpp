#include <benchmark/benchmark.h>

#include "torusot/densities.hpp"
#include "torusot/spectral.hpp"

using namespace torusot;

namespace {

DensitySpec three_mode(int d) {
  std::vector<DensityMode> modes = {{{1, 0, 0}, 0.3, 0.2},
                                    {{2, 1, 0}, 0.2, 1.1},
                                    {{3, 2, 1}, 0.1, 2.5}};
  for (DensityMode& mode : modes) {
    for (int k = d; k < kMaxDim; ++k) mode.m[k] = 0;
  }
  return cosine_mixture_density(d, modes);
}

void bm_forward_transform(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  int n = static_cast<int>(state.range(1));
  GridField field = density_to_field(three_mode(d), Grid(d, n));
  for (auto _ : state) {
    SpectralField spec = forward_transform(field);
    benchmark::DoNotOptimize(spec.coeffs.data());
  }
}
BENCHMARK(bm_forward_transform)->Args({1, 4096})->Args({2, 256})->Args({3, 32});

void bm_sobolev_norm(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  int n = static_cast<int>(state.range(1));
  Grid grid(d, n);
  GridField field = density_to_field(three_mode(d), grid);
  double mean = field.mean();
  for (double& v : field.values) v -= mean;
  for (auto _ : state) benchmark::DoNotOptimize(sobolev_neg_norm_exact_p2(field));
}
BENCHMARK(bm_sobolev_norm)->Args({1, 4096})->Args({2, 256})->Args({3, 32});

void bm_empirical_spectrum(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  int n = static_cast<int>(state.range(1));
  Grid grid(d, n);
  EmpiricalMeasure sample_pts = sample(three_mode(d), 1024, 7);
  for (auto _ : state) {
    SpectralField spec = empirical_spectrum(sample_pts, grid);
    benchmark::DoNotOptimize(spec.coeffs.data());
  }
}
BENCHMARK(bm_empirical_spectrum)->Args({1, 1024})->Args({2, 128})->Args({3, 32});

}  // namespace
