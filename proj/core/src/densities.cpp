#include "torusot/densities.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "torusot/rng.hpp"

namespace torusot {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::int64_t kRejectionCap = 1000000;
}  // namespace

double DensitySpec::eval(const TorusPoint& x) const {
  if (x.dim() != d) throw std::invalid_argument("DensitySpec::eval: dimension mismatch");
  double v = 1.0;
  for (const auto& mode : modes) {
    double phase = mode.theta;
    for (int i = 0; i < d; ++i) phase += kTwoPi * mode.m[static_cast<std::size_t>(i)] * x[i];
    v += mode.alpha * std::cos(phase);
  }
  return v;
}

std::complex<double> DensitySpec::exact_coeff(std::span<const int> m) const {
  if (static_cast<int>(m.size()) != d) {
    throw std::invalid_argument("DensitySpec::exact_coeff: dimension mismatch");
  }
  bool zero = true;
  for (int v : m) zero = zero && v == 0;
  if (zero) return {1.0, 0.0};

  // cos(2 pi m.x + theta) = (e^{i theta} e_{m} + e^{-i theta} e_{-m}) / 2
  std::complex<double> c{0.0, 0.0};
  for (const auto& mode : modes) {
    bool plus = true, minus = true;
    for (int i = 0; i < d; ++i) {
      plus = plus && mode.m[static_cast<std::size_t>(i)] == m[static_cast<std::size_t>(i)];
      minus = minus && mode.m[static_cast<std::size_t>(i)] == -m[static_cast<std::size_t>(i)];
    }
    if (plus) c += 0.5 * mode.alpha * std::polar(1.0, mode.theta);
    if (minus) c += 0.5 * mode.alpha * std::polar(1.0, -mode.theta);
  }
  return c;
}

TorusPoint EmpiricalMeasure::point(std::int64_t i) const {
  return TorusPoint(std::span<const double>(
      pts.data() + i * d, static_cast<std::size_t>(d)));
}

TorusPoint DiscreteMeasure::atom(std::int64_t i) const {
  return TorusPoint(std::span<const double>(
      atoms.data() + i * d, static_cast<std::size_t>(d)));
}

void DiscreteMeasure::validate() const {
  if (weights.empty()) throw std::invalid_argument("DiscreteMeasure: empty measure");
  if (atoms.size() != weights.size() * static_cast<std::size_t>(d)) {
    throw std::invalid_argument("DiscreteMeasure: atom/weight count mismatch");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("DiscreteMeasure: negative weight");
    s += w;
  }
  if (std::fabs(s - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteMeasure: weights must sum to 1 within 1e-12");
  }
}

DensitySpec uniform_density(int d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("uniform_density: unsupported dimension");
  DensitySpec spec;
  spec.d = d;
  spec.f_min = 1.0;
  spec.f_max = 1.0;
  spec.name = "uniform";
  return spec;
}

DensitySpec random_density(int d, std::uint64_t seed) {
  if (d < 1 || d > kMaxDim) {
    throw std::invalid_argument("random_density: unsupported dimension");
  }
  Rng rng(seed);
  int k = rng.uniform_int(1, 3);
  std::vector<DensityMode> modes(static_cast<std::size_t>(k));
  double budget = 0.8;
  for (int j = 0; j < k; ++j) {
    DensityMode& mode = modes[static_cast<std::size_t>(j)];
    bool all_zero = true;
    do {
      for (int i = 0; i < d; ++i) {
        mode.m[static_cast<std::size_t>(i)] = rng.uniform_int(-3, 3);
        if (mode.m[static_cast<std::size_t>(i)] != 0) all_zero = false;
      }
    } while (all_zero);
    double share = budget / static_cast<double>(k);
    mode.alpha = share * (0.25 + 0.75 * rng.uniform());
    mode.theta = rng.uniform(0.0, kTwoPi);
  }
  DensitySpec spec = cosine_mixture_density(d, modes);
  spec.name = "random-cosine";
  return spec;
}

DensitySpec cosine_mixture_density(int d, std::span<const DensityMode> modes) {
  if (d < 1 || d > kMaxDim) {
    throw std::invalid_argument("cosine_mixture_density: unsupported dimension");
  }
  double total = 0.0;
  for (const auto& mode : modes) {
    bool zero = true;
    for (int i = 0; i < d; ++i) zero = zero && mode.m[static_cast<std::size_t>(i)] == 0;
    if (zero) throw std::invalid_argument("cosine_mixture_density: zero frequency mode");
    total += std::fabs(mode.alpha);
  }
  if (total >= 1.0) {
    throw std::invalid_argument(
        "cosine_mixture_density: mode amplitudes sum to >= 1, density could vanish");
  }
  DensitySpec spec;
  spec.d = d;
  spec.modes.assign(modes.begin(), modes.end());
  spec.f_min = 1.0 - total;
  spec.f_max = 1.0 + total;
  spec.name = modes.empty() ? "uniform" : "cosine-mixture";
  return spec;
}

EmpiricalMeasure sample(const DensitySpec& density, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: need at least one point");
  Rng rng(seed);
  EmpiricalMeasure out;
  out.d = density.d;
  out.n = n;
  out.pts.reserve(static_cast<std::size_t>(n * density.d));

  std::array<double, kMaxDim> proposal{};
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t rejections = 0;
    for (;;) {
      for (int k = 0; k < density.d; ++k) proposal[static_cast<std::size_t>(k)] = rng.uniform();
      TorusPoint x(std::span<const double>(proposal.data(), static_cast<std::size_t>(density.d)));
      const double accept = density.eval(x) / density.f_max;
      if (rng.uniform() < accept) {
        for (int k = 0; k < density.d; ++k) out.pts.push_back(x[k]);
        break;
      }
      if (++rejections >= kRejectionCap) {
        throw std::runtime_error("sample: rejection cap hit, density bounds look broken");
      }
    }
  }
  return out;
}

DiscreteMeasure quantize(const DensitySpec& density, const Grid& grid) {
  if (density.d != grid.d) throw std::invalid_argument("quantize: dimension mismatch");
  DiscreteMeasure out;
  out.d = grid.d;
  const std::int64_t total = grid.size();
  out.atoms.reserve(static_cast<std::size_t>(total * grid.d));
  out.weights.resize(static_cast<std::size_t>(total));

  double sum = 0.0;
  for (std::int64_t k = 0; k < total; ++k) {
    TorusPoint node = grid.node(k);
    for (int i = 0; i < grid.d; ++i) out.atoms.push_back(node[i]);
    const double w = density.eval(node);
    out.weights[static_cast<std::size_t>(k)] = w;
    sum += w;
  }
  for (double& w : out.weights) w /= sum;
  // pin the total exactly to 1: rounding across many divisions can leave a
  // residual just above the 1e-12 weight-sum contract on large grids
  double s2 = 0.0;
  for (double w : out.weights) s2 += w;
  std::size_t largest = 0;
  for (std::size_t i = 1; i < out.weights.size(); ++i) {
    if (out.weights[i] > out.weights[largest]) largest = i;
  }
  out.weights[largest] += 1.0 - s2;
  return out;
}

GridField density_to_field(const DensitySpec& density, const Grid& grid) {
  if (density.d != grid.d) throw std::invalid_argument("density_to_field: dimension mismatch");
  GridField field(grid);
  for (std::int64_t k = 0; k < grid.size(); ++k) {
    field.values[static_cast<std::size_t>(k)] = density.eval(grid.node(k));
  }
  return field;
}

DiscreteMeasure to_discrete(const EmpiricalMeasure& sample) {
  if (sample.n < 1) throw std::invalid_argument("to_discrete: empty sample");
  DiscreteMeasure out;
  out.d = sample.d;
  out.atoms = sample.pts;
  out.weights.assign(static_cast<std::size_t>(sample.n), 1.0 / static_cast<double>(sample.n));
  double s = 0.0;
  for (double w : out.weights) s += w;
  out.weights[0] += 1.0 - s;  // keep the sum contract exact for any n
  return out;
}

}  // namespace torusot
