#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace torusot {

// Points and fields live on the unit torus (R/Z)^d with d up to kMaxDim.
inline constexpr int kMaxDim = 3;

class TorusPoint {
 public:
  TorusPoint() = default;
  // Wraps every coordinate into [0,1). Throws std::invalid_argument on
  // non-finite input or unsupported dimension.
  explicit TorusPoint(std::span<const double> coords);
  TorusPoint(std::initializer_list<double> coords)
      : TorusPoint(std::span<const double>(coords.begin(), coords.size())) {}

  int dim() const { return d_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coords() const {
    return {c_.data(), static_cast<std::size_t>(d_)};
  }

 private:
  int d_ = 1;
  std::array<double, kMaxDim> c_{};
};

TorusPoint wrap(std::span<const double> x);
inline TorusPoint wrap(std::initializer_list<double> x) {
  return TorusPoint(x);
}

// Shortest signed representative of t modulo 1, in [-1/2, 1/2).
double wrap_delta(double t);

// Geodesic (periodic Euclidean) distance; at most sqrt(d)/2.
double periodic_distance(const TorusPoint& x, const TorusPoint& y);

struct Grid {
  Grid(int dim, int points_per_axis);

  int d;
  int n;  // points per axis; power of two, at least 4

  std::int64_t size() const;
  double cell_volume() const;  // exactly n^-d

  std::int64_t flatten(std::span<const int> idx) const;
  void unflatten(std::int64_t flat, std::array<int, kMaxDim>& idx) const;
  TorusPoint node(std::int64_t flat) const;
};

std::vector<TorusPoint> grid_nodes(const Grid& grid);

struct GridField {
  explicit GridField(const Grid& g);
  GridField(const Grid& g, std::vector<double> v);

  Grid grid;
  std::vector<double> values;  // row-major over the grid's multi-indices

  double mean() const;
};

}  // namespace torusot
