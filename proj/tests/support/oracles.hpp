#pragma once

#include <complex>
#include <vector>

#include "torusot/ot.hpp"
#include "torusot/spectral.hpp"
#include "torusot/torus.hpp"

namespace torusot::testing {

// Minimum of sum c_ij x_ij over couplings of (a, b), via a dense two-phase
// tableau simplex with Bland's rule on the equality-form LP. Deliberately
// shares no code with the production network simplex; meant for small
// instances (up to ~16 atoms per side).
double lp_transport_cost(const CostMatrix& cost, const std::vector<double>& a,
                         const std::vector<double>& b);

// Equal-weight square instances only: exhaustive minimum over all n!
// assignments, n <= 8. The transportation polytope for uniform marginals has
// permutation matrices as vertices, so this equals the LP optimum.
double assignment_cost(const CostMatrix& cost);

// Direct O(size^2) DFT with the library's normalization,
// coeff(m) = N^-d sum_k v_k e^{-2 pi i m.k/N}, FFT-natural layout.
std::vector<std::complex<double>> direct_dft(const GridField& field);

}  // namespace torusot::testing
