#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "support/frozen_constants.hpp"
#include "torusot/densities.hpp"
#include "torusot/kernel.hpp"
#include "torusot/torus.hpp"

using namespace torusot;
namespace frozen = torusot::testing::frozen;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// independent accumulation over the full signed lattice, no symmetry
// shortcuts, so the multiplicity bookkeeping in v_h_sums gets exercised
VhSums naive_v_h(const KernelSpec& kernel, double h, double p_star, int d, int T) {
  VhSums out;
  const auto visit = [&](int a, int b, int c) {
    const std::int64_t l1 = std::abs(a) + std::abs(b) + std::abs(c);
    if (l1 == 0 || l1 > T) return;
    const double m2 = static_cast<double>(a) * a + static_cast<double>(b) * b +
                      static_cast<double>(c) * c;
    const double k = kappa(kernel, h * std::sqrt(m2));
    const double term = std::pow(std::fabs(k / static_cast<double>(l1)), p_star);
    if (h * static_cast<double>(l1) <= 1.0 + 1e-12) {
      out.s0 += term;
    } else {
      out.s1 += term;
    }
  };
  for (int a = -T; a <= T; ++a) {
    if (d == 1) {
      visit(a, 0, 0);
      continue;
    }
    for (int b = -T; b <= T; ++b) {
      if (d == 2) {
        visit(a, b, 0);
        continue;
      }
      for (int c = -T; c <= T; ++c) visit(a, b, c);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("bandwidth domain") {
  CHECK(Bandwidth(0.25).value() == 0.25);
  CHECK_THROWS_AS(Bandwidth(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Bandwidth(0.5), std::invalid_argument);
  CHECK_THROWS_AS(Bandwidth(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(Bandwidth(std::nan("")), std::invalid_argument);
}

TEST_CASE("bump kernel is cached and normalized") {
  CHECK_THROWS_AS(bump_kernel(0), std::invalid_argument);
  CHECK_THROWS_AS(bump_kernel(4), std::invalid_argument);
  for (int d = 1; d <= 3; ++d) {
    const KernelSpec& k = bump_kernel(d);
    CHECK(&k == &bump_kernel(d));
    CHECK(k.d == d);
    CHECK(std::fabs(k.c_norm - frozen::kNorm[static_cast<std::size_t>(d - 1)]) < 1e-13);
    CHECK(k.eval_radial(0.3) == doctest::Approx(k.c_norm * std::exp(-1.0 / 0.91)).epsilon(1e-14));
    CHECK(k.eval_radial(1.0) == 0.0);
    CHECK(k.eval_radial(1.5) == 0.0);
  }
}

TEST_CASE("fourier transform of the kernel against frozen quadrature") {
  const auto check_spots = [](int d, const auto& spots) {
    const KernelSpec& k = bump_kernel(d);
    CHECK(kappa(k, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
    for (const auto& s : spots) {
      CHECK(std::fabs(kappa(k, s.rho) - s.value) < 1e-10);
    }
  };
  check_spots(1, frozen::kKappaD1);
  check_spots(2, frozen::kKappaD2);
  check_spots(3, frozen::kKappaD3);
}

TEST_CASE("kappa vector form matches the radial form") {
  const KernelSpec& k = bump_kernel(2);
  std::array<double, 2> xi = {0.6, -0.8};
  CHECK(kappa(k, std::span<const double>(xi.data(), 2)) ==
        doctest::Approx(kappa(k, 1.0)).epsilon(1e-14));
  std::array<double, 3> bad = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(kappa(k, std::span<const double>(bad.data(), 3)), std::invalid_argument);
}

TEST_CASE("quartic decay envelope holds over the tabulated range") {
  for (int d = 1; d <= 3; ++d) {
    const KernelSpec& k = bump_kernel(d);
    CHECK(k.decay_amp4 > 0.0);
    for (double rho = 1.0; rho <= 150.0; rho += 0.137) {
      CHECK(std::fabs(kappa(k, rho)) <= k.decay_amp4 / (rho * rho * rho * rho) + 1e-15);
    }
  }
}

TEST_CASE("moment constants against frozen quadrature") {
  for (int d = 1; d <= 3; ++d) {
    const KernelSpec& k = bump_kernel(d);
    for (int p = 1; p <= 4; ++p) {
      const double want = frozen::kC0[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(p - 1)];
      CHECK(std::fabs(kernel_C0(k, p) - want) < 1e-13);
    }
    CHECK(kernel_C0(k, 1.0) < kernel_C0(k, 4.0));  // monotone in p by Jensen
    CHECK(kernel_C0(k, 4.0) < 1.0);
    CHECK_THROWS_AS(kernel_C0(k, 0.5), std::invalid_argument);
  }
}

TEST_CASE("smoothing an exact-coefficient density damps each mode by kappa") {
  std::vector<DensityMode> modes(1);
  modes[0].m = {2, -1, 0};
  modes[0].alpha = 0.5;
  modes[0].theta = 0.3;
  DensitySpec f = cosine_mixture_density(2, modes);
  Grid g(2, 32);
  const double h = 0.15;
  GridField sm = smoothed_density_field(f, Bandwidth(h), g);
  const double damp = kappa(bump_kernel(2), h * std::sqrt(5.0));
  for (std::int64_t i = 0; i < g.size(); ++i) {
    TorusPoint x = g.node(i);
    const double want = 1.0 + 0.5 * damp * std::cos(kTwoPi * (2.0 * x[0] - x[1]) + 0.3);
    CHECK(sm.values[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(smoothed_density_field(f, Bandwidth(h), Grid(1, 32)), std::invalid_argument);
  CHECK_THROWS_AS(smoothed_density_field(random_density(1, 1), Bandwidth(h), Grid(2, 32)),
                  std::invalid_argument);
}

TEST_CASE("direct and spectral density estimates agree on resolved grids") {
  struct Case {
    int d;
    int N;
    double h;
  } cases[] = {{1, 256, 0.1}, {2, 64, 0.4}};
  for (const Case& c : cases) {
    DensitySpec f = random_density(c.d, 42);
    EmpiricalMeasure s = sample(f, 50, 7);
    Grid g(c.d, c.N);
    GridField a = kde_field(s, bump_kernel(c.d), Bandwidth(c.h), g, KdeMethod::direct);
    GridField b = kde_field(s, bump_kernel(c.d), Bandwidth(c.h), g, KdeMethod::spectral);
    double sup = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      sup = std::max(sup, std::fabs(a.values[i] - b.values[i]));
    }
    CHECK(sup < 2e-4);
    CHECK(std::fabs(a.mean() - 1.0) < 1e-6);
    CHECK(std::fabs(b.mean() - 1.0) < 1e-6);
  }
}

TEST_CASE("density estimate rejects bad inputs") {
  EmpiricalMeasure s = sample(uniform_density(1), 10, 1);
  CHECK_THROWS_AS(kde_field(s, bump_kernel(1), Bandwidth(0.1), Grid(2, 16), KdeMethod::direct),
                  std::invalid_argument);
  CHECK_THROWS_AS(kde_field(s, bump_kernel(2), Bandwidth(0.1), Grid(1, 16), KdeMethod::direct),
                  std::invalid_argument);
  EmpiricalMeasure empty;
  empty.d = 1;
  empty.n = 0;
  CHECK_THROWS_AS(kde_field(empty, bump_kernel(1), Bandwidth(0.1), Grid(1, 16), KdeMethod::direct),
                  std::invalid_argument);
  // kernel support narrower than two grid cells: spectral refuses
  CHECK_THROWS_AS(kde_field(s, bump_kernel(1), Bandwidth(0.1), Grid(1, 16), KdeMethod::spectral),
                  std::invalid_argument);
}

TEST_CASE("multiplier sums match a brute-force lattice walk") {
  struct Case {
    int d;
    double h, p_star;
    int T;
  } cases[] = {{1, 0.25, 2.0, 16}, {2, 0.25, 2.0, 16}, {2, 0.4, 3.0, 10},
               {3, 0.25, 2.0, 16}, {3, 0.45, 2.0, 9}};
  for (const Case& c : cases) {
    const KernelSpec& k = bump_kernel(c.d);
    VhSums got = v_h_sums(k, Bandwidth(c.h), c.p_star, c.d, c.T);
    VhSums want = naive_v_h(k, c.h, c.p_star, c.d, c.T);
    CHECK(got.s0 == doctest::Approx(want.s0).epsilon(1e-12));
    if (want.s1 > 0.0) {
      CHECK(got.s1 == doctest::Approx(want.s1).epsilon(1e-12));
    } else {
      CHECK(got.s1 == 0.0);
    }
    CHECK(got.tail_bound >= 0.0);
  }
}

TEST_CASE("multiplier sums flag aggressive truncation") {
  const KernelSpec& k1 = bump_kernel(1);
  CHECK_FALSE(v_h_sums(k1, Bandwidth(0.25), 2.0, 1, 16).truncation_warning);
  CHECK(v_h_sums(k1, Bandwidth(0.25), 2.0, 1, 3).truncation_warning);
  CHECK(v_h_sums(k1, Bandwidth(0.05), 2.0, 1, 16).truncation_warning);  // needs T >= 80
  // resolved in d = 2 as well once the whole mass is inside
  CHECK_FALSE(v_h_sums(bump_kernel(2), Bandwidth(0.4), 3.0, 2, 10).truncation_warning);
  CHECK_THROWS_AS(v_h_sums(k1, Bandwidth(0.25), 1.0, 1, 16), std::invalid_argument);
  CHECK_THROWS_AS(v_h_sums(k1, Bandwidth(0.25), 2.0, 4, 16), std::invalid_argument);
  CHECK_THROWS_AS(v_h_sums(k1, Bandwidth(0.25), 2.0, 1, 0), std::invalid_argument);
}
