#pragma once

#include <cstdint>
#include <vector>

#include "torusot/densities.hpp"
#include "torusot/kernel.hpp"
#include "torusot/torus.hpp"

namespace torusot {

struct PlanEntry {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  double mass = 0.0;
};

// Sparse coupling between two discrete measures. Row sums must reproduce the
// source weights and column sums the target weights within 1e-9.
struct TransportPlan {
  std::int64_t n_source = 0;
  std::int64_t n_target = 0;
  std::vector<PlanEntry> entries;
};

// throws if the plan is not a coupling of (a, b) within tol
void validate_plan(const TransportPlan& plan, const DiscreteMeasure& a, const DiscreteMeasure& b,
                   double tol = 1e-9);

enum class SolverKind { exact, entropic };

struct OTResult {
  double cost_p = 0.0;      // integral of distance^p against the plan
  double wasserstein = 0.0; // cost_p^(1/p)
  TransportPlan plan;
  bool plan_available = false;  // large separable solves skip materialization
  SolverKind method = SolverKind::exact;
  int iterations = 0;
  double marginal_violation = 0.0;  // entropic: L1 violation before rounding
  double epsilon = 0.0;
  bool converged = true;
};

struct CostMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;  // row-major
  double at(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
};

// entry (i,j) = periodic_distance(a_i, b_j)^p
CostMatrix cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b, double p);

// combined atom budget for dense exact solves
inline constexpr std::int64_t kExactAtomCap = 20000;

// Exact W_p by linear programming over couplings. Dispatches to the circle
// solver for d = 1 and to the transportation simplex otherwise; both return a
// vertex plan with at most n_source + n_target - 1 entries.
OTResult exact_wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b, double p);

// d = 1 only: reduces to monotone coupling after an optimal circular shift of
// the quantile variable, minimized by golden-section over the convex shift
// objective. O((n+m) log) per objective evaluation.
OTResult exact_wasserstein_circle(const DiscreteMeasure& a, const DiscreteMeasure& b, double p);

// any d: network simplex on the bipartite transportation polytope, block
// pricing with a Bland anti-cycling fallback, lowest-index tie breaks.
OTResult exact_wasserstein_simplex(const DiscreteMeasure& a, const DiscreteMeasure& b, double p);

// Log-domain Sinkhorn with dual stabilization and an epsilon-scaling schedule
// from 0.5 * mean cost down to the target. The returned cost is that of the
// rounded feasible plan, a certified upper bound on the exact cost.
OTResult entropic_wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b, double p,
                              double epsilon, int max_iter);

// W_p cost of the explicit coupling between a mollified empirical measure and
// the underlying empirical measure: exactly kernel_C0(kernel, p) * h.
double explicit_smoothing_plan_cost(const KernelSpec& kernel, Bandwidth h, double p);

struct EmpiricalDistanceResult {
  OTResult ot;
  double quantization_slack = 0.0;  // sqrt(d)/(2N) from replacing the density
                                    // by its grid quantization
};

// W_p between the empirical measure and quantize(density, grid). For the
// entropic method at p = 2 the grid product structure is exploited with a
// separable-kernel Sinkhorn that never materializes the n x N^d plan, and the
// reported distance is the refined dual value from entropic_grid_estimate
// (the rounded-plan cost would bury small distances under the entropic blur).
EmpiricalDistanceResult empirical_vs_density_wasserstein(const EmpiricalMeasure& sample,
                                                         const DensitySpec& density,
                                                         const Grid& grid, double p,
                                                         SolverKind method,
                                                         double epsilon = 1e-2,
                                                         int max_iter = 20000);

// Entropic solve between sample atoms (weights 1/n) and a weighted grid
// measure, p = 2 only: per-axis cost factorization turns every Sinkhorn sweep
// into small dense matrix products.
OTResult entropic_wasserstein_grid(const EmpiricalMeasure& sample,
                                   const std::vector<double>& grid_weights, const Grid& grid,
                                   double epsilon, int max_iter);

// Two-sided certificate from one entropic solve. upper is the rounded-plan
// result (cost never below the exact optimum). lower_cost_p is the value of a
// dual-feasible pair obtained by exact c-transforms seeded with the converged
// grid potential; alternating the transforms is coordinate ascent on the
// unregularized dual, so the value only improves and stays below the optimum.
// The lower bound tracks the exact cost far more tightly than the rounded
// plan, whose cost carries an additive entropic blur of order d * epsilon / 2.
struct GridEntropicEstimate {
  OTResult upper;
  double lower_cost_p = 0.0;
  double lower_wasserstein = 0.0;  // sqrt(max(lower_cost_p, 0))
};

GridEntropicEstimate entropic_grid_estimate(const EmpiricalMeasure& sample,
                                            const std::vector<double>& grid_weights,
                                            const Grid& grid, double epsilon, int max_iter);

}  // namespace torusot
