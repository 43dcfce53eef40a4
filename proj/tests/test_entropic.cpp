#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "torusot/densities.hpp"
#include "torusot/ot.hpp"
#include "torusot/rng.hpp"
#include "torusot/torus.hpp"

using namespace torusot;

namespace {

DiscreteMeasure random_measure(int d, std::int64_t count, std::uint64_t seed) {
  Rng rng(seed);
  DiscreteMeasure m;
  m.d = d;
  m.atoms.resize(static_cast<std::size_t>(count * d));
  m.weights.resize(static_cast<std::size_t>(count));
  for (double& a : m.atoms) a = rng.uniform();
  double total = 0.0;
  for (double& w : m.weights) {
    w = 0.1 + rng.uniform();
    total += w;
  }
  for (double& w : m.weights) w /= total;
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("entropic cost approaches the exact cost from above as epsilon shrinks") {
  DiscreteMeasure a = random_measure(2, 5, 21);
  DiscreteMeasure b = random_measure(2, 5, 22);
  const double exact = exact_wasserstein(a, b, 2.0).cost_p;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.03, 0.01, 0.003}) {
    OTResult r = entropic_wasserstein(a, b, 2.0, eps, 20000);
    CHECK(r.method == SolverKind::entropic);
    CHECK(r.epsilon == eps);
    CHECK(r.cost_p >= exact - 1e-12);
    CHECK(r.cost_p <= prev + 1e-12);
    validate_plan(r.plan, a, b);
    prev = r.cost_p;
  }
  OTResult fine = entropic_wasserstein(a, b, 2.0, 1e-3, 20000);
  CHECK(fine.cost_p <= exact * 1.01);
  CHECK(fine.converged);
}

TEST_CASE("rounded plans are feasible upper bounds across random instances") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int d = 1 + static_cast<int>(seed % 3);
    Rng rng(7000 + seed);
    DiscreteMeasure a = random_measure(d, 3 + static_cast<std::int64_t>(rng.uniform_int(0, 8)), 7100 + seed);
    DiscreteMeasure b = random_measure(d, 3 + static_cast<std::int64_t>(rng.uniform_int(0, 8)), 7200 + seed);
    const double p = seed % 2 == 0 ? 2.0 : 1.0;
    const double exact = exact_wasserstein(a, b, p).cost_p;
    OTResult r = entropic_wasserstein(a, b, p, 0.01, 20000);
    CHECK(r.cost_p >= exact - 1e-12);
    validate_plan(r.plan, a, b);
  }
}

TEST_CASE("transporting a measure to itself costs almost nothing") {
  for (int d : {1, 2}) {
    DiscreteMeasure a = random_measure(d, 10, 11 + static_cast<std::uint64_t>(d));
    OTResult r = entropic_wasserstein(a, a, 2.0, 1e-3, 20000);
    CHECK(r.cost_p >= 0.0);
    CHECK(r.cost_p < 1e-3);
    validate_plan(r.plan, a, a);
  }
}

TEST_CASE("hitting the iteration cap still yields a feasible upper bound") {
  DiscreteMeasure a = random_measure(1, 8, 31);
  DiscreteMeasure b = random_measure(1, 8, 32);
  const double exact = exact_wasserstein(a, b, 2.0).cost_p;
  OTResult r = entropic_wasserstein(a, b, 2.0, 1e-3, 1);
  CHECK_FALSE(r.converged);
  CHECK(r.cost_p >= exact - 1e-12);
  validate_plan(r.plan, a, b);
}

TEST_CASE("separable grid solve matches the dense pairwise solve") {
  for (int d : {1, 2}) {
    DensitySpec f = random_density(d, 5);
    Grid g(d, d == 1 ? 32 : 16);
    DiscreteMeasure q = quantize(f, g);
    EmpiricalMeasure s = sample(f, 40, 6);
    OTResult grid_res = entropic_wasserstein_grid(s, q.weights, g, 0.01, 20000);
    OTResult pair_res = entropic_wasserstein(to_discrete(s), q, 2.0, 0.01, 20000);
    CHECK(grid_res.cost_p == doctest::Approx(pair_res.cost_p).epsilon(1e-5));
    CHECK_FALSE(grid_res.plan_available);  // the n x N^d plan is never materialized
    CHECK(pair_res.plan_available);
  }
}

TEST_CASE("two-sided estimate brackets the exact cost") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int d = 1 + static_cast<int>(seed % 2);
    DensitySpec f = random_density(d, 100 + seed);
    Grid g(d, d == 1 ? 32 : 8);
    DiscreteMeasure q = quantize(f, g);
    EmpiricalMeasure s = sample(f, 15 + static_cast<std::int64_t>(seed % 10), 200 + seed);
    GridEntropicEstimate est = entropic_grid_estimate(s, q.weights, g, 0.003, 20000);
    const double exact = exact_wasserstein(to_discrete(s), q, 2.0).cost_p;
    CHECK(est.lower_cost_p <= exact + 1e-12);
    CHECK(est.upper.cost_p >= exact - 1e-12);
    CHECK(est.lower_cost_p <= est.upper.cost_p + 1e-15);
    CHECK(est.lower_wasserstein == doctest::Approx(std::sqrt(std::max(est.lower_cost_p, 0.0)))
                                       .epsilon(1e-14));
  }
}

TEST_CASE("empirical-vs-density entropic distance reports the refined dual value") {
  DensitySpec f = random_density(2, 33);
  Grid g(2, 16);
  EmpiricalMeasure s = sample(f, 60, 44);
  EmpiricalDistanceResult dist =
      empirical_vs_density_wasserstein(s, f, g, 2.0, SolverKind::entropic, 0.003);
  DiscreteMeasure q = quantize(f, g);
  GridEntropicEstimate est = entropic_grid_estimate(s, q.weights, g, 0.003, 20000);
  CHECK(dist.ot.wasserstein == est.lower_wasserstein);
  CHECK(dist.ot.cost_p == est.lower_cost_p);
  CHECK(dist.quantization_slack == doctest::Approx(std::sqrt(2.0) / 32.0).epsilon(1e-14));
  // exact route on the same instance agrees closely and never sits above the
  // rounded upper bound
  EmpiricalDistanceResult exact_dist =
      empirical_vs_density_wasserstein(s, f, g, 2.0, SolverKind::exact);
  CHECK(dist.ot.wasserstein <= exact_dist.ot.wasserstein + 1e-12);
  CHECK(est.upper.wasserstein >= exact_dist.ot.wasserstein - 1e-12);
  CHECK(dist.ot.wasserstein >= 0.9 * exact_dist.ot.wasserstein);
}

TEST_CASE("grid solver guards its inputs") {
  DensitySpec f = random_density(1, 9);
  Grid g(1, 32);
  DiscreteMeasure q = quantize(f, g);
  EmpiricalMeasure s = sample(f, 10, 3);

  CHECK_THROWS_AS(entropic_wasserstein_grid(s, q.weights, g, 1e-9, 100), std::runtime_error);
  CHECK_THROWS_AS(entropic_wasserstein_grid(s, q.weights, g, 0.0, 100), std::invalid_argument);

  std::vector<double> short_weights(q.weights.begin(), q.weights.end() - 1);
  CHECK_THROWS_AS(entropic_wasserstein_grid(s, short_weights, g, 0.01, 100), std::invalid_argument);

  std::vector<double> with_zero = q.weights;
  with_zero[3] = 0.0;
  CHECK_THROWS_AS(entropic_wasserstein_grid(s, with_zero, g, 0.01, 100), std::invalid_argument);

  EmpiricalMeasure wrong_d = sample(random_density(2, 1), 10, 3);
  CHECK_THROWS_AS(entropic_wasserstein_grid(wrong_d, q.weights, g, 0.01, 100),
                  std::invalid_argument);
}

TEST_CASE("pairwise entropic solver guards its inputs") {
  DiscreteMeasure a = random_measure(1, 5, 61);
  DiscreteMeasure b = random_measure(1, 5, 62);
  CHECK_THROWS_AS(entropic_wasserstein(a, b, 2.0, -1.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(entropic_wasserstein(a, b, 0.5, 0.01, 100), std::invalid_argument);
  CHECK_THROWS_AS(entropic_wasserstein(a, random_measure(2, 5, 63), 2.0, 0.01, 100),
                  std::invalid_argument);
}
