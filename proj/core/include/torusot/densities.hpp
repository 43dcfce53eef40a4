#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "torusot/torus.hpp"

namespace torusot {

// Densities with certified pointwise bounds 0 < f_min <= f <= f_max on the
// torus. The built-in family is trigonometric:
//   f(x) = 1 + sum_k alpha_k cos(2 pi m_k . x + theta_k)
// which keeps every Fourier coefficient exactly known.
struct DensityMode {
  std::array<int, kMaxDim> m{};  // nonzero integer frequency
  double alpha = 0.0;
  double theta = 0.0;
};

struct DensitySpec {
  int d = 1;
  double f_min = 1.0;
  double f_max = 1.0;
  std::vector<DensityMode> modes;  // empty means uniform
  std::string name = "uniform";

  double eval(const TorusPoint& x) const;

  // exact Fourier coefficient at frequency m (zero off the finite mode set)
  std::complex<double> exact_coeff(std::span<const int> m) const;
  bool has_exact_coeffs() const { return true; }
};

struct EmpiricalMeasure {
  int d = 1;
  std::int64_t n = 0;
  std::vector<double> pts;  // flattened n x d, row-major
  TorusPoint point(std::int64_t i) const;
};

struct DiscreteMeasure {
  int d = 1;
  std::vector<double> atoms;    // flattened count x d
  std::vector<double> weights;  // nonnegative, sums to 1 within 1e-12

  std::int64_t count() const { return static_cast<std::int64_t>(weights.size()); }
  TorusPoint atom(std::int64_t i) const;
  void validate() const;
};

DensitySpec uniform_density(int d);
DensitySpec cosine_mixture_density(int d, std::span<const DensityMode> modes);

// Seeded generator for randomized suites: 1 to 3 modes, per-axis frequencies
// in [-3, 3] (not all zero), amplitudes summing to at most 0.8, so
// f_min >= 0.2 is certified.
DensitySpec random_density(int d, std::uint64_t seed);

EmpiricalMeasure sample(const DensitySpec& density, std::int64_t n, std::uint64_t seed);
DiscreteMeasure quantize(const DensitySpec& density, const Grid& grid);
GridField density_to_field(const DensitySpec& density, const Grid& grid);

DiscreteMeasure to_discrete(const EmpiricalMeasure& sample);

}  // namespace torusot
