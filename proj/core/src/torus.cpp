#include "torusot/torus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace torusot {

namespace {

double wrap_coord(double t) {
  double w = t - std::floor(t);
  if (w >= 1.0) w = 0.0;  // guards against floor rounding at t slightly below an integer
  return w;
}

}  // namespace

TorusPoint::TorusPoint(std::span<const double> coords) {
  if (coords.empty() || coords.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("TorusPoint: dimension must be between 1 and " +
                                std::to_string(kMaxDim));
  }
  d_ = static_cast<int>(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) {
      throw std::invalid_argument("TorusPoint: non-finite coordinate");
    }
    c_[i] = wrap_coord(coords[i]);
  }
}

TorusPoint wrap(std::span<const double> x) { return TorusPoint(x); }

double wrap_delta(double t) {
  double w = t - std::floor(t);
  if (w >= 0.5) w -= 1.0;
  return w;
}

double periodic_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("periodic_distance: dimension mismatch");
  }
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i) {
    double di = std::fabs(x[i] - y[i]);
    if (di > 0.5) di = 1.0 - di;  // coordinates are in [0,1), so |delta| <= 1
    s += di * di;
  }
  return std::sqrt(s);
}

Grid::Grid(int dim, int points_per_axis) : d(dim), n(points_per_axis) {
  if (d < 1 || d > kMaxDim) {
    throw std::invalid_argument("Grid: dimension must be between 1 and " +
                                std::to_string(kMaxDim));
  }
  if (n < 4 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("Grid: points per axis must be a power of two, at least 4");
  }
}

std::int64_t Grid::size() const {
  std::int64_t s = 1;
  for (int i = 0; i < d; ++i) s *= n;
  return s;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < d; ++i) v /= n;
  return v;
}

std::int64_t Grid::flatten(std::span<const int> idx) const {
  std::int64_t f = 0;
  for (int i = 0; i < d; ++i) f = f * n + idx[static_cast<std::size_t>(i)];
  return f;
}

void Grid::unflatten(std::int64_t flat, std::array<int, kMaxDim>& idx) const {
  for (int i = d - 1; i >= 0; --i) {
    idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % n);
    flat /= n;
  }
}

TorusPoint Grid::node(std::int64_t flat) const {
  std::array<int, kMaxDim> idx{};
  unflatten(flat, idx);
  std::array<double, kMaxDim> c{};
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = static_cast<double>(idx[static_cast<std::size_t>(i)]) / n;
  return TorusPoint(std::span<const double>(c.data(), static_cast<std::size_t>(d)));
}

std::vector<TorusPoint> grid_nodes(const Grid& grid) {
  std::vector<TorusPoint> nodes;
  nodes.reserve(static_cast<std::size_t>(grid.size()));
  for (std::int64_t k = 0; k < grid.size(); ++k) nodes.push_back(grid.node(k));
  return nodes;
}

GridField::GridField(const Grid& g)
    : grid(g), values(static_cast<std::size_t>(g.size()), 0.0) {}

GridField::GridField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != static_cast<std::size_t>(grid.size())) {
    throw std::invalid_argument("GridField: value count does not match grid size");
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw std::invalid_argument("GridField: non-finite value");
  }
}

double GridField::mean() const {
  double s = 0.0;
  for (double x : values) s += x;
  return s / static_cast<double>(values.size());
}

}  // namespace torusot
