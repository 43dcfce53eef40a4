#include "torusot/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "torusot/rng.hpp"

namespace torusot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

void run_dft(const Grid& grid, std::vector<std::complex<double>>& data, int sign) {
  int dims[kMaxDim];
  for (int i = 0; i < grid.d; ++i) dims[i] = grid.n;
  auto* raw = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft(grid.d, dims, raw, raw, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("spectral: FFTW plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
}

std::int64_t hermitian_partner(const Grid& grid, std::int64_t flat) {
  std::array<int, kMaxDim> idx{};
  grid.unflatten(flat, idx);
  std::array<int, kMaxDim> partner{};
  for (int i = 0; i < grid.d; ++i) {
    partner[static_cast<std::size_t>(i)] =
        idx[static_cast<std::size_t>(i)] == 0 ? 0 : grid.n - idx[static_cast<std::size_t>(i)];
  }
  return grid.flatten(std::span<const int>(partner.data(), static_cast<std::size_t>(grid.d)));
}

void check_mean_zero(const GridField& field, const char* who) {
  if (std::fabs(field.mean()) > 1e-10) {
    throw std::invalid_argument(std::string(who) + ": field must be mean-zero (|mean| <= 1e-10)");
  }
}

double freq_norm2_sq(std::span<const int> m) {
  double s = 0.0;
  for (int v : m) s += static_cast<double>(v) * v;
  return s;
}

}  // namespace

SpectralField::SpectralField(const Grid& g)
    : grid(g), coeffs(static_cast<std::size_t>(g.size()), {0.0, 0.0}) {}

SpectralField::SpectralField(const Grid& g, std::vector<std::complex<double>> c)
    : grid(g), coeffs(std::move(c)) {
  if (coeffs.size() != static_cast<std::size_t>(grid.size())) {
    throw std::invalid_argument("SpectralField: coefficient count does not match grid");
  }
}

std::int64_t frequency_to_flat(const Grid& grid, std::span<const int> m) {
  if (static_cast<int>(m.size()) != grid.d) {
    throw std::invalid_argument("frequency_to_flat: dimension mismatch");
  }
  std::array<int, kMaxDim> idx{};
  for (int i = 0; i < grid.d; ++i) {
    const int f = m[static_cast<std::size_t>(i)];
    if (f < -grid.n / 2 || f >= grid.n / 2) {
      throw std::invalid_argument("frequency_to_flat: frequency outside representable range");
    }
    idx[static_cast<std::size_t>(i)] = f >= 0 ? f : f + grid.n;
  }
  return grid.flatten(std::span<const int>(idx.data(), static_cast<std::size_t>(grid.d)));
}

void flat_to_frequency(const Grid& grid, std::int64_t flat, std::array<int, kMaxDim>& m) {
  std::array<int, kMaxDim> idx{};
  grid.unflatten(flat, idx);
  for (int i = 0; i < grid.d; ++i) {
    m[static_cast<std::size_t>(i)] = axis_frequency(idx[static_cast<std::size_t>(i)], grid.n);
  }
}

SpectralField forward_transform(const GridField& field) {
  SpectralField spec(field.grid);
  for (std::size_t i = 0; i < field.values.size(); ++i) spec.coeffs[i] = field.values[i];
  run_dft(field.grid, spec.coeffs, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(field.grid.size());
  for (auto& c : spec.coeffs) c *= scale;
  return spec;
}

void hermitian_project(SpectralField& spec) {
  std::vector<std::complex<double>> sym(spec.coeffs.size());
  for (std::int64_t k = 0; k < spec.grid.size(); ++k) {
    const auto partner = hermitian_partner(spec.grid, k);
    sym[static_cast<std::size_t>(k)] =
        0.5 * (spec.coeffs[static_cast<std::size_t>(k)] +
               std::conj(spec.coeffs[static_cast<std::size_t>(partner)]));
  }
  spec.coeffs = std::move(sym);
}

GridField inverse_transform(const SpectralField& spec) {
  // real-valued target: reject clearly non-Hermitian inputs, then symmetrize
  double asym = 0.0;
  for (std::int64_t k = 0; k < spec.grid.size(); ++k) {
    const auto partner = hermitian_partner(spec.grid, k);
    asym = std::max(asym, std::abs(spec.coeffs[static_cast<std::size_t>(k)] -
                                   std::conj(spec.coeffs[static_cast<std::size_t>(partner)])));
  }
  if (asym > 1e-8) {
    throw std::invalid_argument("inverse_transform: coefficients not Hermitian-symmetric");
  }

  std::vector<std::complex<double>> work(spec.coeffs.size());
  for (std::int64_t k = 0; k < spec.grid.size(); ++k) {
    const auto partner = hermitian_partner(spec.grid, k);
    work[static_cast<std::size_t>(k)] =
        0.5 * (spec.coeffs[static_cast<std::size_t>(k)] +
               std::conj(spec.coeffs[static_cast<std::size_t>(partner)]));
  }
  run_dft(spec.grid, work, FFTW_BACKWARD);

  GridField out(spec.grid);
  for (std::size_t i = 0; i < work.size(); ++i) out.values[i] = work[i].real();
  return out;
}

MultiplierSymbol symbol_a() {
  MultiplierSymbol s;
  s.name = "a";
  s.eval = [](std::span<const int> m) {
    std::int64_t l1 = 0;
    for (int v : m) l1 += std::abs(static_cast<std::int64_t>(v));
    return l1 == 0 ? 0.0 : 1.0 / static_cast<double>(l1);
  };
  return s;
}

SpectralField apply_multiplier(const SpectralField& spec, const MultiplierSymbol& s) {
  SpectralField out(spec.grid);
  std::array<int, kMaxDim> m{};
  for (std::int64_t k = 0; k < spec.grid.size(); ++k) {
    flat_to_frequency(spec.grid, k, m);
    const double v = s.eval(std::span<const int>(m.data(), static_cast<std::size_t>(spec.grid.d)));
    if (!std::isfinite(v)) {
      throw std::invalid_argument("apply_multiplier: symbol '" + s.name +
                                  "' unbounded on the representable range");
    }
    out.coeffs[static_cast<std::size_t>(k)] = v * spec.coeffs[static_cast<std::size_t>(k)];
  }
  return out;
}

double lp_norm(const GridField& field, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: need p >= 1");
  double acc = 0.0;
  for (double v : field.values) acc += std::pow(std::fabs(v), p);
  acc /= static_cast<double>(field.values.size());
  return std::pow(acc, 1.0 / p);
}

double sobolev_neg_norm_exact_p2(const SpectralField& spec) {
  const std::complex<double> c0 = spec.coeffs[0];
  if (std::abs(c0) > 1e-10) {
    throw std::invalid_argument("sobolev_neg_norm_exact_p2: field must be mean-zero");
  }
  double acc = 0.0;
  std::array<int, kMaxDim> m{};
  for (std::int64_t k = 1; k < spec.grid.size(); ++k) {
    flat_to_frequency(spec.grid, k, m);
    const double m2 = freq_norm2_sq(std::span<const int>(m.data(), static_cast<std::size_t>(spec.grid.d)));
    if (m2 == 0.0) continue;
    acc += std::norm(spec.coeffs[static_cast<std::size_t>(k)]) / (4.0 * std::numbers::pi * std::numbers::pi * m2);
  }
  return std::sqrt(acc);
}

double sobolev_neg_norm_exact_p2(const GridField& field) {
  return sobolev_neg_norm_exact_p2(forward_transform(field));
}

double riesz_surrogate_norm(const GridField& field, double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("riesz_surrogate_norm: need p >= 2");
  check_mean_zero(field, "riesz_surrogate_norm");
  return lp_norm(inverse_transform(apply_multiplier(forward_transform(field), symbol_a())), p);
}

double beckmann_upper_bound(const GridField& field, double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("beckmann_upper_bound: need p >= 2");
  check_mean_zero(field, "beckmann_upper_bound");

  const Grid& grid = field.grid;
  const SpectralField spec = forward_transform(field);

  // component i of V has coefficients phi_hat(m) * 2 pi i m_i / (-4 pi^2 |m|^2).
  // Nyquist rows make the symbol non-Hermitian, so V is kept complex; its real
  // part alone is a feasible flux and |Re V| <= |V| pointwise, which preserves
  // the upper-bound property while keeping the p = 2 Parseval identity exact.
  std::vector<std::vector<std::complex<double>>> comps(
      static_cast<std::size_t>(grid.d),
      std::vector<std::complex<double>>(spec.coeffs.size(), {0.0, 0.0}));
  std::array<int, kMaxDim> m{};
  for (std::int64_t k = 1; k < grid.size(); ++k) {
    flat_to_frequency(grid, k, m);
    const double m2 = freq_norm2_sq(std::span<const int>(m.data(), static_cast<std::size_t>(grid.d)));
    if (m2 == 0.0) continue;
    const std::complex<double> phi = spec.coeffs[static_cast<std::size_t>(k)];
    for (int i = 0; i < grid.d; ++i) {
      const double mi = m[static_cast<std::size_t>(i)];
      comps[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          phi * std::complex<double>(0.0, -mi / (kTwoPi * m2));
    }
  }
  for (int i = 0; i < grid.d; ++i) run_dft(grid, comps[static_cast<std::size_t>(i)], FFTW_BACKWARD);

  GridField magnitude(grid);
  for (std::size_t x = 0; x < magnitude.values.size(); ++x) {
    double q = 0.0;
    for (int i = 0; i < grid.d; ++i) q += std::norm(comps[static_cast<std::size_t>(i)][x]);
    magnitude.values[x] = std::sqrt(q);
  }
  return lp_norm(magnitude, p);
}

namespace {

// half-space representatives of the nonzero modes with |m_i| <= n_modes
std::vector<std::array<int, kMaxDim>> dual_basis_modes(int d, int n_modes) {
  std::vector<std::array<int, kMaxDim>> modes;
  std::array<int, kMaxDim> m{};
  const int lo = -n_modes, hi = n_modes;
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      bool zero = true, lead_positive = false;
      for (int i = 0; i < d; ++i) {
        if (m[static_cast<std::size_t>(i)] != 0) {
          zero = false;
          lead_positive = m[static_cast<std::size_t>(i)] > 0;
          break;
        }
      }
      if (!zero && lead_positive) modes.push_back(m);
      return;
    }
    for (int v = lo; v <= hi; ++v) {
      m[static_cast<std::size_t>(axis)] = v;
      rec(axis + 1);
    }
  };
  rec(0);
  return modes;
}

}  // namespace

double dual_ascent_lower_bound(const GridField& field, double p, int n_modes, int iters) {
  if (!(p >= 2.0)) throw std::invalid_argument("dual_ascent_lower_bound: need p >= 2");
  if (n_modes < 1) throw std::invalid_argument("dual_ascent_lower_bound: need n_modes >= 1");
  check_mean_zero(field, "dual_ascent_lower_bound");

  const Grid& grid = field.grid;
  if (n_modes >= grid.n / 2) {
    throw std::invalid_argument("dual_ascent_lower_bound: n_modes must stay below N/2");
  }
  const double p_star = p / (p - 1.0);
  const auto modes = dual_basis_modes(grid.d, n_modes);
  const std::size_t nm = modes.size();
  const std::int64_t npts = grid.size();

  // precompute basis tables and the linear functional F
  std::vector<std::vector<double>> cos_tab(nm), sin_tab(nm);
  std::vector<double> f_cos(nm), f_sin(nm);
  for (std::size_t j = 0; j < nm; ++j) {
    cos_tab[j].resize(static_cast<std::size_t>(npts));
    sin_tab[j].resize(static_cast<std::size_t>(npts));
    double fc = 0.0, fs = 0.0;
    for (std::int64_t k = 0; k < npts; ++k) {
      const TorusPoint x = grid.node(k);
      double phase = 0.0;
      for (int i = 0; i < grid.d; ++i) phase += modes[j][static_cast<std::size_t>(i)] * x[i];
      const double c = std::cos(kTwoPi * phase);
      const double s = std::sin(kTwoPi * phase);
      cos_tab[j][static_cast<std::size_t>(k)] = c;
      sin_tab[j][static_cast<std::size_t>(k)] = s;
      fc += field.values[static_cast<std::size_t>(k)] * c;
      fs += field.values[static_cast<std::size_t>(k)] * s;
    }
    f_cos[j] = fc / static_cast<double>(npts);
    f_sin[j] = fs / static_cast<double>(npts);
  }

  std::vector<double> grad_psi(static_cast<std::size_t>(npts) * static_cast<std::size_t>(grid.d));
  auto evaluate = [&](const std::vector<double>& a, const std::vector<double>& b,
                      double& f_out, double& g_out) {
    std::fill(grad_psi.begin(), grad_psi.end(), 0.0);
    double f = 0.0;
    for (std::size_t j = 0; j < nm; ++j) {
      f += a[j] * f_cos[j] + b[j] * f_sin[j];
      for (std::int64_t k = 0; k < npts; ++k) {
        const double dbase = -a[j] * sin_tab[j][static_cast<std::size_t>(k)] +
                             b[j] * cos_tab[j][static_cast<std::size_t>(k)];
        for (int i = 0; i < grid.d; ++i) {
          grad_psi[static_cast<std::size_t>(k) * grid.d + static_cast<std::size_t>(i)] +=
              kTwoPi * modes[j][static_cast<std::size_t>(i)] * dbase;
        }
      }
    }
    double acc = 0.0;
    for (std::int64_t k = 0; k < npts; ++k) {
      double q = 0.0;
      for (int i = 0; i < grid.d; ++i) {
        const double g = grad_psi[static_cast<std::size_t>(k) * grid.d + static_cast<std::size_t>(i)];
        q += g * g;
      }
      acc += std::pow(q, 0.5 * p_star);
    }
    g_out = std::pow(acc / static_cast<double>(npts), 1.0 / p_star);
    f_out = f;
  };

  // gradient of G^{p*} with respect to the coefficients, via the chain rule
  auto ascend = [&](std::vector<double> a, std::vector<double> b) {
    double best = 0.0;
    double f = 0.0, g = 0.0;
    for (int t = 1; t <= iters; ++t) {
      evaluate(a, b, f, g);
      if (g < 1e-300) break;
      best = std::max(best, f / g);
      // normalize to the constraint surface, then take a ratio-ascent step
      const double inv_g = 1.0 / g;
      for (std::size_t j = 0; j < nm; ++j) {
        a[j] *= inv_g;
        b[j] *= inv_g;
      }
      f *= inv_g;
      const double step = 0.1 / std::sqrt(static_cast<double>(t));
      // dR = grad F - (F/G) grad G evaluated at G = 1
      for (std::size_t j = 0; j < nm; ++j) {
        double dg_a = 0.0, dg_b = 0.0;
        for (std::int64_t k = 0; k < npts; ++k) {
          double q = 0.0;
          for (int i = 0; i < grid.d; ++i) {
            const double gv =
                grad_psi[static_cast<std::size_t>(k) * grid.d + static_cast<std::size_t>(i)] * inv_g;
            q += gv * gv;
          }
          const double qp = std::pow(std::max(q, 1e-24), 0.5 * p_star - 1.0);
          double dot_a = 0.0, dot_b = 0.0;
          for (int i = 0; i < grid.d; ++i) {
            const double gv =
                grad_psi[static_cast<std::size_t>(k) * grid.d + static_cast<std::size_t>(i)] * inv_g;
            const double basis_c = kTwoPi * modes[j][static_cast<std::size_t>(i)] *
                                   (-sin_tab[j][static_cast<std::size_t>(k)]);
            const double basis_s = kTwoPi * modes[j][static_cast<std::size_t>(i)] *
                                   cos_tab[j][static_cast<std::size_t>(k)];
            dot_a += gv * basis_c;
            dot_b += gv * basis_s;
          }
          dg_a += qp * dot_a;
          dg_b += qp * dot_b;
        }
        dg_a /= static_cast<double>(npts);
        dg_b /= static_cast<double>(npts);
        a[j] += step * (f_cos[j] - f * dg_a);
        b[j] += step * (f_sin[j] - f * dg_b);
      }
    }
    evaluate(a, b, f, g);
    if (g > 1e-300) best = std::max(best, f / g);
    return best;
  };

  // warm start at the p = 2 optimum shape, then a few random restarts
  std::vector<double> a0(nm, 0.0), b0(nm, 0.0);
  for (std::size_t j = 0; j < nm; ++j) {
    double m2 = 0.0;
    for (int i = 0; i < grid.d; ++i) {
      m2 += static_cast<double>(modes[j][static_cast<std::size_t>(i)]) * modes[j][static_cast<std::size_t>(i)];
    }
    a0[j] = f_cos[j] / (kTwoPi * kTwoPi * m2);
    b0[j] = f_sin[j] / (kTwoPi * kTwoPi * m2);
  }
  double best = std::fabs(ascend(a0, b0));

  Rng rng(0x5EEDull);
  for (int r = 0; r < 3; ++r) {
    std::vector<double> a(nm), b(nm);
    for (std::size_t j = 0; j < nm; ++j) {
      a[j] = rng.uniform(-1.0, 1.0);
      b[j] = rng.uniform(-1.0, 1.0);
    }
    best = std::max(best, std::fabs(ascend(a, b)));
  }
  return best;
}

SpectralField empirical_spectrum(const EmpiricalMeasure& sample, const Grid& grid) {
  if (sample.n < 1) throw std::invalid_argument("empirical_spectrum: empty sample");
  if (sample.d != grid.d) throw std::invalid_argument("empirical_spectrum: dimension mismatch");

  SpectralField spec(grid);
  const int n_axis = grid.n;
  std::vector<std::complex<double>> phase(
      static_cast<std::size_t>(grid.d) * static_cast<std::size_t>(n_axis));

  for (std::int64_t j = 0; j < sample.n; ++j) {
    // per-axis tables of e^{-2 pi i f X}, FFT-natural order, built by recurrence
    for (int ax = 0; ax < grid.d; ++ax) {
      const double x = sample.pts[static_cast<std::size_t>(j * grid.d + ax)];
      const std::complex<double> w = std::polar(1.0, -kTwoPi * x);
      auto* row = phase.data() + static_cast<std::size_t>(ax) * static_cast<std::size_t>(n_axis);
      row[0] = {1.0, 0.0};
      for (int k = 1; k < n_axis / 2; ++k) row[k] = row[k - 1] * w;
      row[n_axis / 2] = std::conj(row[n_axis / 2 - 1] * w);  // frequency -N/2
      for (int k = n_axis / 2 + 1; k < n_axis; ++k) {
        row[k] = std::conj(row[n_axis - k]);  // negative frequencies
      }
    }
    if (grid.d == 1) {
      for (int k = 0; k < n_axis; ++k) spec.coeffs[static_cast<std::size_t>(k)] += phase[static_cast<std::size_t>(k)];
    } else if (grid.d == 2) {
      const auto* p0 = phase.data();
      const auto* p1 = phase.data() + n_axis;
      std::size_t idx = 0;
      for (int k0 = 0; k0 < n_axis; ++k0) {
        const std::complex<double> a = p0[k0];
        for (int k1 = 0; k1 < n_axis; ++k1) spec.coeffs[idx++] += a * p1[k1];
      }
    } else {
      const auto* p0 = phase.data();
      const auto* p1 = phase.data() + n_axis;
      const auto* p2 = phase.data() + 2 * n_axis;
      std::size_t idx = 0;
      for (int k0 = 0; k0 < n_axis; ++k0) {
        for (int k1 = 0; k1 < n_axis; ++k1) {
          const std::complex<double> a = p0[k0] * p1[k1];
          for (int k2 = 0; k2 < n_axis; ++k2) spec.coeffs[idx++] += a * p2[k2];
        }
      }
    }
  }
  for (auto& c : spec.coeffs) c /= static_cast<double>(sample.n);
  return spec;
}

}  // namespace torusot
