#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "torusot/ot.hpp"

namespace torusot {

namespace {

constexpr double kReducedCostEps = 1e-13;

// transportation-polytope network simplex over the bipartite graph of all
// (source, target) pairs; the basis is a spanning tree of ns + nt - 1 arcs
class TransportSimplex {
 public:
  TransportSimplex(const DiscreteMeasure& a, const DiscreteMeasure& b, double p)
      : a_(a), b_(b), p_(p), ns_(a.count()), nt_(b.count()) {
    const std::int64_t total = ns_ * nt_;
    if (total <= 34000000) {
      cache_.resize(static_cast<std::size_t>(total));
      for (std::int64_t i = 0; i < ns_; ++i) {
        const TorusPoint x = a_.atom(i);
        for (std::int64_t j = 0; j < nt_; ++j) {
          cache_[static_cast<std::size_t>(i * nt_ + j)] =
              std::pow(periodic_distance(x, b_.atom(j)), p_);
        }
      }
    }
  }

  OTResult solve() {
    northwest_corner();
    const std::int64_t v = ns_ + nt_;
    parent_.assign(static_cast<std::size_t>(v), -1);
    parent_arc_.assign(static_cast<std::size_t>(v), -1);
    depth_.assign(static_cast<std::size_t>(v), 0);
    order_.reserve(static_cast<std::size_t>(v));
    u_.assign(static_cast<std::size_t>(ns_), 0.0);
    w_.assign(static_cast<std::size_t>(nt_), 0.0);

    const std::int64_t block =
        std::max<std::int64_t>(64, static_cast<std::int64_t>(std::sqrt(static_cast<double>(ns_) * nt_)));
    std::int64_t scan_from = 0;
    std::int64_t stalled = 0;
    bool bland = false;

    for (std::int64_t pivot = 0;; ++pivot) {
      if (pivot > 4000000) {
        throw std::runtime_error("exact_wasserstein_simplex: pivot limit exceeded");
      }
      rebuild_tree();
      std::int64_t enter = bland ? price_bland() : price_block(block, &scan_from);
      if (enter < 0) break;
      if (!pivot_on(enter)) stalled++; else stalled = 0;
      if (stalled > 3000 && !bland) bland = true;  // anti-cycling fallback
    }

    OTResult out;
    out.method = SolverKind::exact;
    out.plan.n_source = ns_;
    out.plan.n_target = nt_;
    double cost = 0.0;
    for (std::size_t k = 0; k < arc_src_.size(); ++k) {
      if (arc_flow_[k] > 0.0) {
        out.plan.entries.push_back({arc_src_[k], arc_dst_[k], arc_flow_[k]});
        cost += arc_flow_[k] * cost_at(arc_src_[k], arc_dst_[k]);
      }
    }
    out.plan_available = true;
    out.cost_p = cost;
    out.wasserstein = std::pow(cost, 1.0 / p_);
    out.iterations = static_cast<int>(std::min<std::int64_t>(pivots_, 2147483647));
    return out;
  }

 private:
  double cost_at(std::int64_t i, std::int64_t j) const {
    if (!cache_.empty()) return cache_[static_cast<std::size_t>(i * nt_ + j)];
    return std::pow(periodic_distance(a_.atom(i), b_.atom(j)), p_);
  }

  void northwest_corner() {
    arc_src_.clear();
    arc_dst_.clear();
    arc_flow_.clear();
    std::int64_t i = 0, j = 0;
    double ra = a_.weights[0], rb = b_.weights[0];
    while (true) {
      const double m = std::min(ra, rb);
      arc_src_.push_back(i);
      arc_dst_.push_back(j);
      arc_flow_.push_back(m);
      ra -= m;
      rb -= m;
      if (i == ns_ - 1 && j == nt_ - 1) break;
      // on ties advance the source side only, keeping a degenerate zero arc
      if (ra <= 0.0 && i < ns_ - 1) {
        ++i;
        ra = a_.weights[static_cast<std::size_t>(i)];
      } else {
        ++j;
        rb = b_.weights[static_cast<std::size_t>(j)];
      }
    }
    if (static_cast<std::int64_t>(arc_src_.size()) != ns_ + nt_ - 1) {
      throw std::runtime_error("exact_wasserstein_simplex: bad initial basis");
    }
  }

  // recompute parents, depths and duals from the basic arcs (root = node 0)
  void rebuild_tree() {
    const std::int64_t v = ns_ + nt_;
    adj_.assign(static_cast<std::size_t>(v), {});
    for (std::size_t k = 0; k < arc_src_.size(); ++k) {
      adj_[static_cast<std::size_t>(arc_src_[k])].push_back(static_cast<std::int64_t>(k));
      adj_[static_cast<std::size_t>(ns_ + arc_dst_[k])].push_back(static_cast<std::int64_t>(k));
    }
    std::fill(parent_.begin(), parent_.end(), -1);
    order_.clear();
    order_.push_back(0);
    parent_[0] = 0;
    depth_[0] = 0;
    u_[0] = 0.0;
    for (std::size_t q = 0; q < order_.size(); ++q) {
      const std::int64_t node = order_[q];
      for (std::int64_t k : adj_[static_cast<std::size_t>(node)]) {
        const std::int64_t other =
            node < ns_ ? ns_ + arc_dst_[static_cast<std::size_t>(k)] : arc_src_[static_cast<std::size_t>(k)];
        if (parent_[static_cast<std::size_t>(other)] >= 0) continue;
        parent_[static_cast<std::size_t>(other)] = node;
        parent_arc_[static_cast<std::size_t>(other)] = k;
        depth_[static_cast<std::size_t>(other)] = depth_[static_cast<std::size_t>(node)] + 1;
        const double c = cost_at(arc_src_[static_cast<std::size_t>(k)], arc_dst_[static_cast<std::size_t>(k)]);
        if (other < ns_) {
          u_[static_cast<std::size_t>(other)] = c - w_[static_cast<std::size_t>(node - ns_)];
        } else {
          w_[static_cast<std::size_t>(other - ns_)] = c - u_[static_cast<std::size_t>(node)];
        }
        order_.push_back(other);
      }
    }
    if (static_cast<std::int64_t>(order_.size()) != v) {
      throw std::runtime_error("exact_wasserstein_simplex: basis not spanning");
    }
  }

  double reduced(std::int64_t flat) const {
    const std::int64_t i = flat / nt_, j = flat % nt_;
    return cost_at(i, j) - u_[static_cast<std::size_t>(i)] - w_[static_cast<std::size_t>(j)];
  }

  std::int64_t price_block(std::int64_t block, std::int64_t* scan_from) {
    const std::int64_t total = ns_ * nt_;
    std::int64_t best = -1;
    double best_r = -kReducedCostEps;
    std::int64_t scanned = 0;
    std::int64_t pos = *scan_from;
    while (scanned < total) {
      const std::int64_t chunk = std::min(block, total - scanned);
      for (std::int64_t c = 0; c < chunk; ++c) {
        const double r = reduced(pos);
        if (r < best_r) {
          best_r = r;
          best = pos;
        }
        pos = pos + 1 == total ? 0 : pos + 1;
      }
      scanned += chunk;
      if (best >= 0) break;
    }
    *scan_from = pos;
    return best;
  }

  std::int64_t price_bland() const {
    const std::int64_t total = ns_ * nt_;
    for (std::int64_t flat = 0; flat < total; ++flat) {
      if (reduced(flat) < -kReducedCostEps) return flat;
    }
    return -1;
  }

  // returns true when the pivot strictly moved mass
  bool pivot_on(std::int64_t enter_flat) {
    ++pivots_;
    const std::int64_t ei = enter_flat / nt_, ej = enter_flat % nt_;
    // tree path from the target endpoint back to the source endpoint; arcs
    // alternate -theta, +theta starting at the target side
    cycle_.clear();
    std::int64_t x = ns_ + ej, y = ei;
    std::vector<std::int64_t>& up_x = path_x_;
    std::vector<std::int64_t>& up_y = path_y_;
    up_x.clear();
    up_y.clear();
    while (depth_[static_cast<std::size_t>(x)] > depth_[static_cast<std::size_t>(y)]) {
      up_x.push_back(parent_arc_[static_cast<std::size_t>(x)]);
      x = parent_[static_cast<std::size_t>(x)];
    }
    while (depth_[static_cast<std::size_t>(y)] > depth_[static_cast<std::size_t>(x)]) {
      up_y.push_back(parent_arc_[static_cast<std::size_t>(y)]);
      y = parent_[static_cast<std::size_t>(y)];
    }
    while (x != y) {
      up_x.push_back(parent_arc_[static_cast<std::size_t>(x)]);
      x = parent_[static_cast<std::size_t>(x)];
      up_y.push_back(parent_arc_[static_cast<std::size_t>(y)]);
      y = parent_[static_cast<std::size_t>(y)];
    }
    for (std::int64_t k : up_x) cycle_.push_back(k);
    for (std::size_t r = up_y.size(); r > 0; --r) cycle_.push_back(up_y[r - 1]);

    double theta = 1e300;
    std::int64_t leave = -1;
    for (std::size_t pos = 0; pos < cycle_.size(); pos += 2) {
      const std::int64_t k = cycle_[pos];
      const double f = arc_flow_[static_cast<std::size_t>(k)];
      if (f < theta || (f == theta && k < leave)) {
        theta = f;
        leave = k;
      }
    }
    if (leave < 0) throw std::runtime_error("exact_wasserstein_simplex: unbounded pivot");

    for (std::size_t pos = 0; pos < cycle_.size(); ++pos) {
      arc_flow_[static_cast<std::size_t>(cycle_[pos])] += (pos % 2 == 0 ? -theta : theta);
    }
    arc_src_[static_cast<std::size_t>(leave)] = ei;
    arc_dst_[static_cast<std::size_t>(leave)] = ej;
    arc_flow_[static_cast<std::size_t>(leave)] = theta;
    return theta > 0.0;
  }

  const DiscreteMeasure& a_;
  const DiscreteMeasure& b_;
  double p_;
  std::int64_t ns_, nt_;
  std::vector<double> cache_;
  std::vector<std::int64_t> arc_src_, arc_dst_;
  std::vector<double> arc_flow_;
  std::vector<std::vector<std::int64_t>> adj_;
  std::vector<std::int64_t> parent_, parent_arc_, order_, cycle_, path_x_, path_y_;
  std::vector<std::int64_t> depth_;
  std::vector<double> u_, w_;
  std::int64_t pivots_ = 0;
};

}  // namespace

OTResult exact_wasserstein_simplex(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  if (a.d != b.d) throw std::invalid_argument("exact_wasserstein_simplex: dimension mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("exact_wasserstein_simplex: need p >= 1");
  a.validate();
  b.validate();
  TransportSimplex solver(a, b, p);
  return solver.solve();
}

}  // namespace torusot
