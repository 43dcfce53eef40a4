#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "torusot/densities.hpp"
#include "torusot/torus.hpp"

namespace torusot {

// Fourier convention: characters e^{2 pi i m.x} on the unit torus, so
//   coeff(m) = N^{-d} sum_k values(k) e^{-2 pi i m.(k/N)}
// with m per axis in {-N/2, ..., N/2-1}. Coefficients are stored in
// FFT-natural order: axis index k holds frequency k for k < N/2, else k - N.
struct SpectralField {
  explicit SpectralField(const Grid& g);
  SpectralField(const Grid& g, std::vector<std::complex<double>> c);

  Grid grid;
  std::vector<std::complex<double>> coeffs;
};

inline int axis_frequency(int k, int n) { return k < n / 2 ? k : k - n; }

// flat coefficient index for a frequency multi-index (each entry in [-N/2, N/2-1])
std::int64_t frequency_to_flat(const Grid& grid, std::span<const int> m);
void flat_to_frequency(const Grid& grid, std::int64_t flat, std::array<int, kMaxDim>& m);

SpectralField forward_transform(const GridField& field);
GridField inverse_transform(const SpectralField& spec);

// Projects onto the Hermitian subspace, coeff(m) <- (coeff(m) +
// conj(coeff(-m)))/2. Spectra of atomic measures are genuinely asymmetric on
// the Nyquist rows; this is the real-part projection that makes them a valid
// input for inverse_transform.
void hermitian_project(SpectralField& spec);

struct MultiplierSymbol {
  std::string name;
  std::function<double(std::span<const int>)> eval;
};

// a(0) = 0 and a(m) = 1 / (|m_1| + ... + |m_d|) otherwise.
MultiplierSymbol symbol_a();

SpectralField apply_multiplier(const SpectralField& spec, const MultiplierSymbol& s);

double lp_norm(const GridField& field, double p);

// Exact homogeneous H^{-1} norm at p = 2 over grid frequencies:
//   ( sum_{m != 0} |coeff(m)|^2 / (4 pi^2 |m|_2^2) )^{1/2}
// Requires a mean-zero field.
double sobolev_neg_norm_exact_p2(const GridField& field);
double sobolev_neg_norm_exact_p2(const SpectralField& spec);

// ||A(phi)||_{L_p} with A the multiplier with symbol a; upper-bounds the
// H^{-1}_p norm up to a fixed constant. Requires mean-zero field, p >= 2.
double riesz_surrogate_norm(const GridField& field, double p);

// L_p norm of the pointwise magnitude of V = grad(laplacian^{-1}) phi.
// V is a feasible dual flux (div V = phi), so this upper-bounds the
// H^{-1}_p norm; at p = 2 it is exactly the Parseval value.
double beckmann_upper_bound(const GridField& field, double p);

// Certified lower bound on the H^{-1}_p norm: ascends sup{ <phi, psi> :
// ||grad psi||_{L_{p*}} <= 1 } over a truncated cosine span of psi.
double dual_ascent_lower_bound(const GridField& field, double p, int n_modes, int iters);

// Exact Fourier coefficients of the empirical measure,
//   mu_hat(m) = n^{-1} sum_j e^{-2 pi i m.X_j}
SpectralField empirical_spectrum(const EmpiricalMeasure& sample, const Grid& grid);

}  // namespace torusot
