#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "torusot/ot.hpp"

namespace torusot {

namespace {

struct SortedSide {
  std::vector<double> pos;
  std::vector<double> cum;  // cumulative weights, cum.back() == 1
  std::vector<std::int64_t> orig;
};

SortedSide sort_side(const DiscreteMeasure& m) {
  SortedSide s;
  const std::size_t n = static_cast<std::size_t>(m.count());
  s.orig.resize(n);
  std::iota(s.orig.begin(), s.orig.end(), 0);
  std::sort(s.orig.begin(), s.orig.end(), [&](std::int64_t i, std::int64_t j) {
    const double xi = m.atoms[static_cast<std::size_t>(i)];
    const double xj = m.atoms[static_cast<std::size_t>(j)];
    return xi != xj ? xi < xj : i < j;
  });
  s.pos.resize(n);
  s.cum.resize(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double x = m.atoms[static_cast<std::size_t>(s.orig[k])];
    x -= std::floor(x);
    s.pos[k] = x;
    acc += m.weights[static_cast<std::size_t>(s.orig[k])];
    s.cum[k] = acc;
  }
  s.cum[n - 1] = 1.0;
  return s;
}

// cost of the monotone quantile coupling with circular shift t, unrolled to
// the line; optionally emits the matched segments
double eval_shift(const SortedSide& A, const SortedSide& B, double p, double t,
                  std::vector<PlanEntry>* entries) {
  const std::size_t n = A.pos.size();
  const std::size_t m = B.pos.size();

  double s = 0.0;
  std::size_t i = 0;
  while (i < n && A.cum[i] <= 0.0) ++i;

  const double u0 = -t;
  double wind = std::floor(u0);
  double r = u0 - wind;
  if (r >= 1.0) {  // guard the floor edge case
    r = 0.0;
    wind += 1.0;
  }
  std::size_t j = static_cast<std::size_t>(
      std::upper_bound(B.cum.begin(), B.cum.end(), r) - B.cum.begin());
  if (j == m) {
    j = 0;
    wind += 1.0;
    r = 0.0;
  }
  double bend = B.cum[j] - r;  // s-coordinate where the current b atom exhausts

  double cost = 0.0;
  const std::size_t max_steps = n + 12 * m + 64;
  for (std::size_t step = 0; step < max_steps; ++step) {
    if (s >= 1.0) break;
    const double aend = A.cum[i];
    const double send = std::min(std::min(aend, bend), 1.0);
    const double mass = send - s;
    if (mass > 0.0) {
      const double delta = A.pos[i] - (B.pos[j] + wind);
      cost += mass * std::pow(std::fabs(delta), p);
      if (entries != nullptr) {
        if (!entries->empty() && entries->back().src == A.orig[i] &&
            entries->back().dst == B.orig[j]) {
          entries->back().mass += mass;
        } else {
          entries->push_back({A.orig[i], B.orig[j], mass});
        }
      }
    }
    s = send;
    if (s >= 1.0) break;
    if (aend <= s) {
      ++i;
      while (i < n && A.cum[i] <= s) ++i;
      if (i == n) break;  // numeric slack: remaining mass is zero
    }
    if (bend <= s) {
      for (;;) {
        ++j;
        if (j == m) {
          j = 0;
          wind += 1.0;
          bend += B.cum[0];  // quantile axis continues seamlessly across wraps
        } else {
          bend += B.cum[j] - B.cum[j - 1];
        }
        if (bend > s) break;
      }
    }
  }
  if (s < 1.0 - 1e-9) {
    throw std::runtime_error("exact_wasserstein_circle: quantile merge did not close");
  }
  return cost;
}

// the staircase support closes one cycle around the circle; cancel it so the
// plan becomes a forest (a transportation-polytope vertex)
void cancel_cycle(std::vector<PlanEntry>& entries, const DiscreteMeasure& a,
                  const DiscreteMeasure& b, double p) {
  const std::int64_t n = a.count();
  const std::int64_t m = b.count();
  while (static_cast<std::int64_t>(entries.size()) > n + m - 1) {
    const std::size_t nodes = static_cast<std::size_t>(n + m);
    // union-find to locate an edge closing a cycle
    std::vector<std::size_t> parent(nodes);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    std::size_t closing = entries.size();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const std::size_t u = static_cast<std::size_t>(entries[e].src);
      const std::size_t v = static_cast<std::size_t>(n + entries[e].dst);
      const std::size_t ru = find(u), rv = find(v);
      if (ru == rv) {
        closing = e;
        break;
      }
      parent[ru] = rv;
    }
    if (closing == entries.size()) return;  // already a forest

    // BFS through the tree edges between the closing edge's endpoints
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nodes);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (e == closing) continue;
      const std::size_t u = static_cast<std::size_t>(entries[e].src);
      const std::size_t v = static_cast<std::size_t>(n + entries[e].dst);
      adj[u].push_back({v, e});
      adj[v].push_back({u, e});
    }
    const std::size_t src = static_cast<std::size_t>(entries[closing].src);
    const std::size_t dst = static_cast<std::size_t>(n + entries[closing].dst);
    std::vector<std::int64_t> via(nodes, -1);
    std::vector<std::size_t> via_edge(nodes), queue{src};
    via[src] = static_cast<std::int64_t>(src);
    for (std::size_t q = 0; q < queue.size() && via[dst] < 0; ++q) {
      for (const auto& [next, e] : adj[queue[q]]) {
        if (via[next] >= 0) continue;
        via[next] = static_cast<std::int64_t>(queue[q]);
        via_edge[next] = e;
        queue.push_back(next);
      }
    }
    if (via[dst] < 0) return;  // disconnected, nothing to cancel

    // alternate flow directions along the cycle, closing edge positive
    std::vector<std::pair<std::size_t, double>> cycle{{closing, 1.0}};
    double sign = -1.0;
    for (std::size_t at = dst; at != src; at = static_cast<std::size_t>(via[at])) {
      cycle.push_back({via_edge[at], sign});
      sign = -sign;
    }
    double cost_delta = 0.0;
    for (const auto& [e, sg] : cycle) {
      const double rho =
          periodic_distance(a.atom(entries[e].src), b.atom(entries[e].dst));
      cost_delta += sg * std::pow(rho, p);
    }
    const double push_dir = cost_delta > 0.0 ? -1.0 : 1.0;
    double delta = 1e300;
    for (const auto& [e, sg] : cycle) {
      if (sg * push_dir < 0.0) delta = std::min(delta, entries[e].mass);
    }
    if (delta >= 1e300) return;
    for (const auto& [e, sg] : cycle) entries[e].mass += sg * push_dir * delta;
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [](const PlanEntry& e) { return e.mass <= 1e-300; }),
                  entries.end());
  }
}

}  // namespace

OTResult exact_wasserstein_circle(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  if (a.d != 1 || b.d != 1) throw std::invalid_argument("exact_wasserstein_circle: d = 1 only");
  if (!(p >= 1.0)) throw std::invalid_argument("exact_wasserstein_circle: need p >= 1");
  a.validate();
  b.validate();

  const SortedSide A = sort_side(a);
  const SortedSide B = sort_side(b);
  const auto objective = [&](double t) { return eval_shift(A, B, p, t, nullptr); };

  // golden-section over the convex shift objective; the optimum shift always
  // lies within one winding, the expansion is pure paranoia
  double lo = -1.0, hi = 1.0;
  for (int tries = 0; tries < 3; ++tries) {
    const double probe = 1e-3 * (hi - lo);
    if (objective(lo) < objective(lo + probe)) {
      lo = 2.0 * lo;
    } else if (objective(hi) < objective(hi - probe)) {
      hi = 2.0 * hi;
    } else {
      break;
    }
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  while (hi - lo > 1e-13) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double t_star = 0.5 * (lo + hi);

  OTResult out;
  out.method = SolverKind::exact;
  out.plan.n_source = a.count();
  out.plan.n_target = b.count();
  eval_shift(A, B, p, t_star, &out.plan.entries);
  cancel_cycle(out.plan.entries, a, b, p);
  out.plan_available = true;

  double cost = 0.0;
  for (const PlanEntry& e : out.plan.entries) {
    cost += e.mass * std::pow(periodic_distance(a.atom(e.src), b.atom(e.dst)), p);
  }
  out.cost_p = cost;
  out.wasserstein = std::pow(cost, 1.0 / p);
  return out;
}

}  // namespace torusot
