#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "torusot/bounds.hpp"
#include "torusot/densities.hpp"
#include "torusot/ot.hpp"

namespace torusot {

// h = c * n^{-exponent}; the default exponent is 1/d
struct HRule {
  double c = 0.4;
  double exponent = 1.0;

  double h_for(std::int64_t n) const {
    return c * std::pow(static_cast<double>(n), -exponent);
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  int d = 1;
  double p = 2.0;
  DensitySpec density;
  std::vector<std::int64_t> n_ladder;
  HRule h_rule;
  int reps = 20;
  int grid_n = 256;
  SolverKind solver = SolverKind::exact;
  double epsilon = 1e-2;
  std::uint64_t seed = 1;
  int jobs = 0;  // <= 0: all hardware threads

  // ladders for the lemma suite and its subcommands
  std::vector<double> h_ladder{0.25, 0.125, 0.0625, 0.03125};
  std::vector<std::int64_t> rosenthal_n{16, 64, 256, 1024};
  int suite_instances = 20;

  // kernel_workload runs evaluate K_h on the grid, which needs the spectral
  // resolution floor grid_n * min(h_ladder) >= 8; rate runs never do and are
  // exempt (their h column is bookkeeping for the record)
  void validate(bool kernel_workload) const;
};

struct RatePoint {
  std::int64_t n = 0;
  double h = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> replicates;
  std::vector<std::uint64_t> seeds;
  std::vector<double> runtimes_ms;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct RateReport {
  std::string experiment;
  int d = 1;
  double p = 2.0;
  std::string solver = "exact";
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double quantization_slack = 0.0;
  std::vector<RatePoint> points;
  RateFit fit;
  double slope_ci_lo = 0.0;
  double slope_ci_hi = 0.0;

  // d = 2 only: least-squares fit of mean = constant * sqrt(log n / n)
  bool has_log_model = false;
  double log_model_constant = 0.0;
  double log_model_rel_residual = 0.0;
  double log_model_max_over_min = 0.0;

  std::string to_json() const;
};

RateReport parse_rate_report(const std::string& json_text);

// least squares on (log n, log mean); throws on fewer than 2 distinct n or a
// nonpositive mean
RateFit fit_rate(std::span<const std::pair<double, double>> points);

// Per-replicate solve returning W_p; wall time goes through runtime_ms. The
// default hook draws the sample at the given seed and runs
// empirical_vs_density_wasserstein on the config's grid and solver.
using SolveHook = std::function<double(const ExperimentConfig&, std::int64_t n, int replicate,
                                       std::uint64_t seed, double h, double* runtime_ms)>;

// Monte Carlo sweep over (n_ladder x reps) with per-item derived seeds, OLS
// rate fit, and a 1000-resample bootstrap CI for the slope. Deterministic
// given (config, seed) for any job count; solver errors are rethrown with
// the (n, replicate) coordinate attached.
RateReport run_rate_experiment(const ExperimentConfig& config);
RateReport run_rate_experiment(const ExperimentConfig& config, const SolveHook& hook);

// The batch driver behind verify-lemma: Peyre pairs, the bias and v_h
// ladders, Rosenthal over its n ladder, one decomposition report, and the
// explicit-smoothing-plan check, all seeded from config.seed.
std::vector<BoundReport> run_lemma_suite(const ExperimentConfig& config);

// Desk-scale acceptance band for the fitted rate: slope in [-0.60, -0.40]
// for d = 1, the sqrt(log n / n) model with max/min < 2 for d = 2, slope in
// [-0.43, -0.23] for d = 3. Explains a miss through *why when given.
bool rate_band_ok(const RateReport& report, std::string* why = nullptr);

}  // namespace torusot
