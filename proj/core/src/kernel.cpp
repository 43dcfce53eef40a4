#include "torusot/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "torusot/quadrature.hpp"

namespace torusot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return kTwoPi;
    case 3: return 2.0 * kTwoPi;
    default: throw std::invalid_argument("bump_kernel: d must be in {1,2,3}");
  }
}

// X_1-marginal of K at offset t in [0,1), without the normalization constant.
// Reduces kappa to a one-dimensional cosine transform.
double marginal_profile(int d, double t) {
  const double s2 = 1.0 - t * t;
  if (s2 <= 0.0) return 0.0;
  switch (d) {
    case 1:
      return KernelSpec::profile(t);
    case 2: {
      const double s = std::sqrt(s2);
      return 2.0 * integrate(
                       [t](double y) {
                         const double u = 1.0 - t * t - y * y;
                         return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
                       },
                       0.0, s, 1e-14);
    }
    case 3:
      // polar integral over the two remaining axes collapses to exp(-1/u)
      return std::numbers::pi *
             integrate([](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }, 0.0, s2,
                       1e-14);
    default:
      throw std::invalid_argument("bump_kernel: d must be in {1,2,3}");
  }
}

KernelSpec build_kernel(int d) {
  KernelSpec kern;
  kern.d = d;

  const double radial = integrate(
      [d](double r) { return std::pow(r, d - 1) * KernelSpec::profile(r); }, 0.0, 1.0, 1e-14);
  kern.c_norm = 1.0 / (sphere_area(d) * radial);

  // kappa(rho) = 2 int_0^1 G(t) cos(2 pi rho t) dt with G the marginal above.
  // One fixed node set swept over all table knots with a rotation recurrence.
  const QuadratureNodes nodes = composite_gauss16(0.0, 1.0, 192);
  std::vector<double> gw(nodes.x.size());
  for (std::size_t j = 0; j < nodes.x.size(); ++j) {
    gw[j] = 2.0 * kern.c_norm * nodes.w[j] * marginal_profile(d, nodes.x[j]);
  }

  const std::size_t knots = static_cast<std::size_t>(std::llround(kern.kappa_range / kern.kappa_step)) + 1;
  kern.kappa_table.assign(knots, 0.0);
  for (std::size_t j = 0; j < nodes.x.size(); ++j) {
    const double theta = kTwoPi * kern.kappa_step * nodes.x[j];
    const std::complex<double> step = std::polar(1.0, theta);
    std::complex<double> z{1.0, 0.0};
    const double g = gw[j];
    for (std::size_t k = 0; k < knots; ++k) {
      kern.kappa_table[k] += g * z.real();
      z *= step;
      if ((k & 0x1fff) == 0x1fff) z = std::polar(1.0, theta * static_cast<double>(k + 1));
    }
  }

  // pin kappa(0) = 1 exactly, folding residual quadrature error of c_norm
  const double scale = 1.0 / kern.kappa_table[0];
  for (double& v : kern.kappa_table) v *= scale;

  double amp = 0.0;
  for (std::size_t k = knots / 200; k < knots; ++k) {  // rho >= 1
    const double rho = static_cast<double>(k) * kern.kappa_step;
    amp = std::max(amp, std::fabs(kern.kappa_table[k]) * rho * rho * rho * rho);
  }
  kern.decay_amp4 = amp;
  return kern;
}

double ipow_abs(double x, double p) {
  if (p == 2.0) return x * x;
  return std::pow(std::fabs(x), p);
}

}  // namespace

Bandwidth::Bandwidth(double h) : h_(h) {
  if (!(h > 0.0) || !(h < 0.5)) {
    throw std::invalid_argument("Bandwidth: h must lie strictly in (0, 1/2)");
  }
}

double KernelSpec::profile(double r) {
  const double u = 1.0 - r * r;
  return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
}

const KernelSpec& bump_kernel(int d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("bump_kernel: d must be in {1,2,3}");
  static std::mutex mu;
  static std::unique_ptr<KernelSpec> cache[kMaxDim];
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[d - 1];
  if (!slot) slot = std::make_unique<KernelSpec>(build_kernel(d));
  return *slot;
}

double kernel_C0(const KernelSpec& kernel, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("kernel_C0: need p >= 1");
  const int d = kernel.d;
  const double moment = integrate(
      [d, p](double r) { return std::pow(r, p + d - 1) * KernelSpec::profile(r); }, 0.0, 1.0,
      1e-14);
  return std::pow(sphere_area(d) * kernel.c_norm * moment, 1.0 / p);
}

double kappa(const KernelSpec& kernel, double rho) {
  if (rho < 0.0) rho = -rho;
  const auto knots = kernel.kappa_table.size();
  const double u = rho / kernel.kappa_step;
  if (u >= static_cast<double>(knots - 1)) return 0.0;  // below 1e-15 out there

  // 4-point Lagrange cubic on the uniform table
  std::size_t base = static_cast<std::size_t>(u);
  base = base == 0 ? 0 : std::min(base - 1, knots - 4);
  const double x = u - static_cast<double>(base);
  const double* t = kernel.kappa_table.data() + base;
  const double l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
  const double l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
  const double l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
  const double l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
  return l0 * t[0] + l1 * t[1] + l2 * t[2] + l3 * t[3];
}

double kappa(const KernelSpec& kernel, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != kernel.d) {
    throw std::invalid_argument("kappa: frequency dimension mismatch");
  }
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  return kappa(kernel, std::sqrt(r2));
}

GridField smoothed_density_field(const DensitySpec& density, Bandwidth h, const Grid& grid) {
  if (density.d != grid.d) throw std::invalid_argument("smoothed_density_field: dimension mismatch");
  if (!density.has_exact_coeffs()) {
    throw std::invalid_argument("smoothed_density_field: density lacks exact coefficients");
  }
  const KernelSpec& kern = bump_kernel(density.d);

  SpectralField spec(grid);
  spec.coeffs[0] = {1.0, 0.0};
  for (const DensityMode& mode : density.modes) {
    double m2 = 0.0;
    std::array<int, kMaxDim> neg{};
    for (int i = 0; i < density.d; ++i) {
      m2 += static_cast<double>(mode.m[static_cast<std::size_t>(i)]) *
            mode.m[static_cast<std::size_t>(i)];
      neg[static_cast<std::size_t>(i)] = -mode.m[static_cast<std::size_t>(i)];
    }
    const double k = kappa(kern, h.value() * std::sqrt(m2));
    const std::span<const int> mp(mode.m.data(), static_cast<std::size_t>(density.d));
    const std::span<const int> mn(neg.data(), static_cast<std::size_t>(density.d));
    // exact_coeff returns the total coefficient at a frequency, so plain
    // assignment stays correct when modes share a frequency
    spec.coeffs[static_cast<std::size_t>(frequency_to_flat(grid, mp))] = k * density.exact_coeff(mp);
    spec.coeffs[static_cast<std::size_t>(frequency_to_flat(grid, mn))] = k * density.exact_coeff(mn);
  }
  return inverse_transform(spec);
}

namespace {

GridField kde_direct(const EmpiricalMeasure& sample, const KernelSpec& kernel, double h,
                     const Grid& grid) {
  GridField out(grid);
  const int n_axis = grid.n;
  const double h2 = h * h;
  const double atom_scale = std::pow(h, -grid.d) / static_cast<double>(sample.n);

  std::vector<int> idx[kMaxDim];
  std::vector<double> dx2[kMaxDim];
  for (std::int64_t j = 0; j < sample.n; ++j) {
    for (int ax = 0; ax < grid.d; ++ax) {
      idx[ax].clear();
      dx2[ax].clear();
      const double x = sample.pts[static_cast<std::size_t>(j * grid.d + ax)];
      std::int64_t lo = static_cast<std::int64_t>(std::ceil((x - h) * n_axis));
      std::int64_t hi = static_cast<std::int64_t>(std::floor((x + h) * n_axis));
      if (hi - lo + 1 >= n_axis) {
        lo = 0;
        hi = n_axis - 1;
      }
      for (std::int64_t k = lo; k <= hi; ++k) {
        const double delta = wrap_delta(static_cast<double>(k) / n_axis - x);
        const int kk = static_cast<int>(((k % n_axis) + n_axis) % n_axis);
        idx[ax].push_back(kk);
        dx2[ax].push_back(delta * delta);
      }
    }
    // nested walk over the candidate box, pruned on the running distance
    const std::size_t n0 = idx[0].size();
    for (std::size_t i0 = 0; i0 < n0; ++i0) {
      const double r0 = dx2[0][i0];
      if (r0 >= h2) continue;
      if (grid.d == 1) {
        out.values[static_cast<std::size_t>(idx[0][i0])] +=
            atom_scale * kernel.eval_radial(std::sqrt(r0 / h2));
        continue;
      }
      for (std::size_t i1 = 0; i1 < idx[1].size(); ++i1) {
        const double r1 = r0 + dx2[1][i1];
        if (r1 >= h2) continue;
        if (grid.d == 2) {
          const std::size_t flat =
              static_cast<std::size_t>(idx[0][i0]) * n_axis + static_cast<std::size_t>(idx[1][i1]);
          out.values[flat] += atom_scale * kernel.eval_radial(std::sqrt(r1 / h2));
          continue;
        }
        const std::size_t row =
            (static_cast<std::size_t>(idx[0][i0]) * n_axis + static_cast<std::size_t>(idx[1][i1])) *
            n_axis;
        for (std::size_t i2 = 0; i2 < idx[2].size(); ++i2) {
          const double r2 = r1 + dx2[2][i2];
          if (r2 >= h2) continue;
          out.values[row + static_cast<std::size_t>(idx[2][i2])] +=
              atom_scale * kernel.eval_radial(std::sqrt(r2 / h2));
        }
      }
    }
  }
  return out;
}

GridField kde_spectral(const EmpiricalMeasure& sample, const KernelSpec& kernel, double h,
                       const Grid& grid) {
  if (grid.n * h < 2.0) {
    throw std::invalid_argument("kde_field: spectral method needs N*h >= 2 (kernel under-resolved)");
  }
  SpectralField spec = empirical_spectrum(sample, grid);
  std::array<int, kMaxDim> m{};
  for (std::int64_t k = 0; k < grid.size(); ++k) {
    flat_to_frequency(grid, k, m);
    double m2 = 0.0;
    for (int i = 0; i < grid.d; ++i) {
      m2 += static_cast<double>(m[static_cast<std::size_t>(i)]) * m[static_cast<std::size_t>(i)];
    }
    spec.coeffs[static_cast<std::size_t>(k)] *= kappa(kernel, h * std::sqrt(m2));
  }
  hermitian_project(spec);  // atomic spectra are asymmetric on Nyquist rows
  return inverse_transform(spec);
}

}  // namespace

GridField kde_field(const EmpiricalMeasure& sample, const KernelSpec& kernel, Bandwidth h,
                    const Grid& grid, KdeMethod method) {
  if (sample.d != grid.d || kernel.d != grid.d) {
    throw std::invalid_argument("kde_field: dimension mismatch");
  }
  if (sample.n < 1) throw std::invalid_argument("kde_field: empty sample");
  return method == KdeMethod::direct ? kde_direct(sample, kernel, h.value(), grid)
                                     : kde_spectral(sample, kernel, h.value(), grid);
}

VhSums v_h_sums(const KernelSpec& kernel, Bandwidth h, double p_star, int d, int truncation) {
  if (!(p_star > 1.0)) throw std::invalid_argument("v_h_sums: need p_star > 1");
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("v_h_sums: d must be in {1,2,3}");
  if (truncation < 1) throw std::invalid_argument("v_h_sums: truncation must be positive");

  const double hv = h.value();
  VhSums out;
  const auto add = [&](std::int64_t l1, double m2_int, double mult) {
    const double k = kappa(kernel, hv * std::sqrt(m2_int));
    const double term = mult * ipow_abs(k / static_cast<double>(l1), p_star);
    if (hv * static_cast<double>(l1) <= 1.0 + 1e-12) {
      out.s0 += term;
    } else {
      out.s1 += term;
    }
  };

  const std::int64_t T = truncation;
  if (d == 1) {
    for (std::int64_t a = 1; a <= T; ++a) add(a, static_cast<double>(a) * a, 2.0);
  } else if (d == 2) {
    for (std::int64_t a = 0; 2 * a <= T; ++a) {
      for (std::int64_t b = std::max<std::int64_t>(a, 1); a + b <= T; ++b) {
        const double perms = a == b ? 1.0 : 2.0;
        const double signs = std::pow(2.0, (a != 0) + (b != 0));
        add(a + b, static_cast<double>(a * a + b * b), perms * signs);
      }
    }
  } else {
    for (std::int64_t a = 0; 3 * a <= T; ++a) {
      for (std::int64_t b = a; a + 2 * b <= T; ++b) {
        for (std::int64_t c = std::max<std::int64_t>(b, 1); a + b + c <= T; ++c) {
          double perms;
          if (a == b && b == c) {
            perms = 1.0;
          } else if (a == b || b == c) {
            perms = 3.0;
          } else {
            perms = 6.0;
          }
          const double signs = std::pow(2.0, (a != 0) + (b != 0) + (c != 0));
          add(a + b + c, static_cast<double>(a * a + b * b + c * c), perms * signs);
        }
      }
    }
  }

  // tail: |kappa| <= min(1, A rho^-4) with rho >= h l / sqrt(d) on the shell
  // |m|_1 = l, and at most c_d l^(d-1) lattice points per shell
  const double c_d = d == 1 ? 2.0 : (d == 2 ? 4.0 : 6.0);
  const double sqd = std::sqrt(static_cast<double>(d));
  double tail = 0.0;
  for (std::int64_t l = T + 1; l <= T + 2000000; ++l) {
    const double rho = hv * static_cast<double>(l) / sqd;
    const double kb = std::min(1.0, kernel.decay_amp4 / (rho * rho * rho * rho));
    const double shell = c_d * std::pow(static_cast<double>(l), d - 1);
    const double term = shell * ipow_abs(kb / static_cast<double>(l), p_star);
    tail += term;
    if (term < 1e-16 * (out.s0 + out.s1 + tail) || term < 1e-300) break;
  }
  out.tail_bound = tail;
  out.truncation_warning =
      static_cast<double>(T) < 4.0 / hv - 1e-9 || tail > 1e-6 * (out.s0 + out.s1);
  return out;
}

}  // namespace torusot
