#pragma once

#include <span>
#include <vector>

#include "torusot/densities.hpp"
#include "torusot/spectral.hpp"
#include "torusot/torus.hpp"

namespace torusot {

// Mollifier bandwidth. Strictly inside (0, 1/2) so the support of the scaled
// kernel fits within one period of the torus.
class Bandwidth {
 public:
  explicit Bandwidth(double h);
  double value() const { return h_; }

 private:
  double h_;
};

// The radial bump kernel K(x) = c_norm * exp(-1/(1-|x|^2)) on the unit ball,
// together with a dense radial table of its Fourier transform
// kappa(xi) = integral K(x) cos(2 pi xi . x) dx, which has no closed form.
struct KernelSpec {
  int d = 0;
  double c_norm = 0.0;

  // kappa evaluated at rho = k * kappa_step for k = 0 .. table size - 1
  std::vector<double> kappa_table;
  double kappa_step = 1e-3;
  double kappa_range = 200.0;

  // A such that |kappa(rho)| <= A * rho^-4 over the tabulated range rho >= 1,
  // used to bound truncated lattice tails
  double decay_amp4 = 0.0;

  static double profile(double r);   // exp(-1/(1-r^2)) for r < 1, else 0
  double eval_radial(double r) const { return c_norm * profile(r); }
};

// Returns the cached kernel for dimension d in {1,2,3}. The table is built
// eagerly on first use; the returned reference stays valid for the process
// lifetime and is safe to share across threads.
const KernelSpec& bump_kernel(int d);

// C_0(p) = (integral |x|^p K(x) dx)^(1/p), always in (0,1). Needs p >= 1.
double kernel_C0(const KernelSpec& kernel, double p);

// Fourier transform of K at the point xi (radial, so only |xi|_2 matters).
double kappa(const KernelSpec& kernel, std::span<const double> xi);
double kappa(const KernelSpec& kernel, double rho);

// Field of the mollified density K_h * f, computed from the density's exact
// Fourier coefficients: coefficient at m is kappa(h m) * f_hat(m). Requires a
// density with an exact finite mode set.
GridField smoothed_density_field(const DensitySpec& density, Bandwidth h, const Grid& grid);

enum class KdeMethod { direct, spectral };

// Kernel density estimate of the sample: mean of periodized K_h(. - X_j).
// direct evaluates the sums pointwise at the nodes; spectral multiplies the
// empirical spectrum by kappa(h m) and inverse transforms. spectral requires
// N*h >= 2 so the kernel is resolved by the grid.
GridField kde_field(const EmpiricalMeasure& sample, const KernelSpec& kernel, Bandwidth h,
                    const Grid& grid, KdeMethod method);

struct VhSums {
  double s0 = 0.0;        // sum of |a(m) kappa(h m)|^p* over 0 < |h m|_1 <= 1
  double s1 = 0.0;        // same over |h m|_1 > 1 up to the truncation radius
  double tail_bound = 0.0;
  bool truncation_warning = false;
};

// Sums the multiplier sequence v_h(m) = kappa(h m)/|m|_1 to the p* power over
// the lattice ball |m|_1 <= truncation (lattice units; choose truncation >=
// 4/h so the tail is negligible). tail_bound estimates the discarded mass and
// truncation_warning is set when the truncation is too aggressive.
VhSums v_h_sums(const KernelSpec& kernel, Bandwidth h, double p_star, int d, int truncation);

}  // namespace torusot
