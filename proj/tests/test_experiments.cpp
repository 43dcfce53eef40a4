#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusot/densities.hpp"
#include "torusot/experiments.hpp"
#include "torusot/kernel.hpp"
#include "torusot/rng.hpp"

using namespace torusot;

namespace {

ExperimentConfig base_config(int d) {
  ExperimentConfig cfg;
  cfg.name = "synthetic";
  cfg.d = d;
  cfg.density = uniform_density(d);
  cfg.n_ladder = {128, 256, 512, 1024, 2048, 4096, 8192};
  cfg.h_rule = {0.4, 1.0 / d};
  cfg.reps = 6;
  cfg.grid_n = 64;
  cfg.seed = 11;
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST_CASE("bandwidth rule") {
  HRule rule{0.4, 0.5};
  CHECK(rule.h_for(16) == doctest::Approx(0.1).epsilon(1e-14));
  HRule dflt;
  CHECK(dflt.h_for(100) == doctest::Approx(0.004).epsilon(1e-14));
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(base_config(1).validate(false));
  CHECK_NOTHROW(base_config(3).validate(false));

  auto broken = [](auto mutate) {
    ExperimentConfig cfg = base_config(1);
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.d = 4; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.density = uniform_density(2); }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.p = 0.5; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.n_ladder = {128}; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.n_ladder = {128, 128}; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.n_ladder = {1, 128}; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.reps = 4; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.grid_n = 100; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.grid_n = 2; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.h_rule.c = 0.6; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.h_rule.exponent = -0.5; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.h_ladder = {0.25, 0.6}; }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) {
                    c.solver = SolverKind::entropic;
                    c.epsilon = 0.0;
                  }).validate(false),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](ExperimentConfig& c) { c.suite_instances = 0; }).validate(false),
                  std::invalid_argument);

  // the kernel-resolution floor only binds workloads that evaluate K_h
  ExperimentConfig cfg = base_config(1);  // grid_n 64, min(h_ladder) 0.03125
  CHECK_NOTHROW(cfg.validate(false));
  CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);
  cfg.grid_n = 256;
  CHECK_NOTHROW(cfg.validate(true));
  cfg.rosenthal_n = {};
  CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);
  cfg.rosenthal_n = {0, 16};
  CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);
}

TEST_CASE("rate fit recovers exact power laws") {
  std::vector<std::pair<double, double>> pts;
  for (double n : {100.0, 400.0, 1600.0, 6400.0}) pts.emplace_back(n, 3.0 * std::pow(n, -0.5));
  RateFit fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rate fit under multiplicative noise stays near the truth") {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(9000 + trial);
    std::vector<std::pair<double, double>> pts;
    for (int k = 7; k <= 13; ++k) {
      const double n = std::pow(2.0, k);
      pts.emplace_back(n, 2.0 * std::pow(n, -0.5) * std::exp(0.03 * rng.normal()));
    }
    const double slope = fit_rate(pts).slope;
    CHECK(slope > -0.6);
    CHECK(slope < -0.4);
  }
}

TEST_CASE("rate fit input guards") {
  std::vector<std::pair<double, double>> one = {{100.0, 0.1}};
  CHECK_THROWS_AS(fit_rate(one), std::invalid_argument);
  std::vector<std::pair<double, double>> same_n = {{100.0, 0.1}, {100.0, 0.2}};
  CHECK_THROWS_AS(fit_rate(same_n), std::invalid_argument);
  std::vector<std::pair<double, double>> zero_mean = {{100.0, 0.1}, {200.0, 0.0}};
  CHECK_THROWS_AS(fit_rate(zero_mean), std::invalid_argument);
  std::vector<std::pair<double, double>> bad_n = {{-1.0, 0.1}, {200.0, 0.2}};
  CHECK_THROWS_AS(fit_rate(bad_n), std::invalid_argument);
}

TEST_CASE("synthetic power-law sweeps recover the exponent exactly") {
  ExperimentConfig cfg = base_config(1);
  std::atomic<int> calls{0};
  SolveHook hook = [&](const ExperimentConfig&, std::int64_t n, int, std::uint64_t, double,
                       double* runtime_ms) {
    ++calls;
    if (runtime_ms) *runtime_ms = 1.0;
    return 2.0 * std::pow(static_cast<double>(n), -0.5);
  };
  RateReport rep = run_rate_experiment(cfg, hook);
  CHECK(calls.load() == static_cast<int>(cfg.n_ladder.size()) * cfg.reps);
  CHECK(rep.fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(rep.fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.slope_ci_lo <= rep.fit.slope);
  CHECK(rep.slope_ci_hi >= rep.fit.slope);
  CHECK_FALSE(rep.has_log_model);
  CHECK(rep.solver == "exact");
  CHECK(rep.quantization_slack == doctest::Approx(1.0 / 128.0).epsilon(1e-14));
  for (const RatePoint& pt : rep.points) {
    CHECK(pt.h == doctest::Approx(cfg.h_rule.h_for(pt.n)).epsilon(1e-14));
    CHECK(pt.std_error <= 1e-29);  // constant replicates floor the spread
    for (double ms : pt.runtimes_ms) CHECK(ms == 1.0);
  }
  CHECK_THROWS_AS(run_rate_experiment(cfg, SolveHook()), std::invalid_argument);
}

TEST_CASE("sweep seeds are derived from the ladder slot and replicate only") {
  ExperimentConfig cfg = base_config(1);
  cfg.seed = 123456789;
  SolveHook hook = [](const ExperimentConfig&, std::int64_t, int, std::uint64_t seed, double,
                      double*) {
    // fold the seed into the value so determinism checks see it
    return 0.5 + 1e-3 * static_cast<double>(seed >> 40);
  };
  RateReport rep = run_rate_experiment(cfg, hook);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const RatePoint& pt = rep.points[i];
    for (int r = 0; r < cfg.reps; ++r) {
      CHECK(pt.seeds[static_cast<std::size_t>(r)] ==
            derive_seed(cfg.seed, (static_cast<std::uint64_t>(i) << 32) |
                                      static_cast<std::uint64_t>(r)));
    }
  }
}

TEST_CASE("sweep output is identical for any job count") {
  ExperimentConfig cfg = base_config(2);
  cfg.n_ladder = {64, 256, 1024};
  SolveHook hook = [](const ExperimentConfig&, std::int64_t n, int, std::uint64_t seed, double,
                      double* runtime_ms) {
    if (runtime_ms) *runtime_ms = 2.0;  // wall time would differ across schedules
    Rng rng(seed);
    return (1.0 + 0.1 * rng.normal()) * std::sqrt(std::log(static_cast<double>(n)) /
                                                  static_cast<double>(n));
  };
  cfg.jobs = 1;
  const std::string a = run_rate_experiment(cfg, hook).to_json();
  cfg.jobs = 4;
  const std::string b = run_rate_experiment(cfg, hook).to_json();
  cfg.jobs = 0;
  const std::string c = run_rate_experiment(cfg, hook).to_json();
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("replicate failures carry their ladder coordinate") {
  ExperimentConfig cfg = base_config(1);
  SolveHook hook = [](const ExperimentConfig&, std::int64_t n, int replicate, std::uint64_t,
                      double, double*) -> double {
    if (n == 512 && replicate == 3) throw std::runtime_error("solver blew up");
    return std::pow(static_cast<double>(n), -0.5);
  };
  CHECK_THROWS_WITH_AS(run_rate_experiment(cfg, hook),
                       doctest::Contains("n=512, replicate=3"), std::runtime_error);
}

TEST_CASE("two-dimensional sweeps carry the log-corrected model") {
  ExperimentConfig cfg = base_config(2);
  SolveHook hook = [](const ExperimentConfig&, std::int64_t n, int, std::uint64_t, double,
                      double*) {
    return 0.3 * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
  };
  RateReport rep = run_rate_experiment(cfg, hook);
  CHECK(rep.has_log_model);
  CHECK(rep.log_model_constant == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rep.log_model_rel_residual < 1e-12);
  CHECK(rep.log_model_max_over_min == doctest::Approx(1.0).epsilon(1e-12));
  std::string why;
  CHECK(rate_band_ok(rep, &why));
}

TEST_CASE("desk acceptance bands per dimension") {
  RateReport rep;
  rep.d = 1;
  rep.fit.slope = -0.5;
  CHECK(rate_band_ok(rep));
  rep.fit.slope = -0.7;
  std::string why;
  CHECK_FALSE(rate_band_ok(rep, &why));
  CHECK(why.find("outside") != std::string::npos);

  rep.d = 3;
  rep.fit.slope = -0.33;
  CHECK(rate_band_ok(rep));
  rep.fit.slope = -0.5;
  CHECK_FALSE(rate_band_ok(rep));

  rep.d = 2;
  rep.fit.slope = -0.5;
  rep.has_log_model = false;
  CHECK_FALSE(rate_band_ok(rep));
  rep.has_log_model = true;
  rep.log_model_max_over_min = 1.5;
  CHECK(rate_band_ok(rep));
  rep.log_model_max_over_min = 2.5;
  CHECK_FALSE(rate_band_ok(rep, &why));
  CHECK(why.find("not below 2.0") != std::string::npos);
}

TEST_CASE("a flat bandwidth rule is visible as a broken rate") {
  // the two-sided decomposition value C0 h + n^{-1/2}: scaling h with n keeps
  // the sum on the n^{-1/2} rate; freezing h leaves a constant floor and the
  // fitted slope collapses toward zero
  const double c0 = kernel_C0(bump_kernel(1), 2.0);
  SolveHook bound_curve = [&](const ExperimentConfig& c, std::int64_t n, int, std::uint64_t,
                              double h, double*) {
    (void)c;
    return c0 * h + std::pow(static_cast<double>(n), -0.5);
  };
  ExperimentConfig good = base_config(1);
  good.h_rule = {0.4, 1.0};
  RateReport ok = run_rate_experiment(good, bound_curve);
  std::string why;
  CHECK(rate_band_ok(ok, &why));

  ExperimentConfig flat = base_config(1);
  flat.h_rule = {0.4, 0.0};
  RateReport bad = run_rate_experiment(flat, bound_curve);
  CHECK_FALSE(rate_band_ok(bad, &why));
  CHECK(bad.fit.slope > -0.2);
}

TEST_CASE("report JSON roundtrip preserves every field") {
  ExperimentConfig cfg = base_config(2);
  cfg.solver = SolverKind::entropic;
  cfg.epsilon = 0.003;
  SolveHook hook = [](const ExperimentConfig&, std::int64_t n, int, std::uint64_t seed, double,
                      double* runtime_ms) {
    if (runtime_ms) *runtime_ms = 0.25;
    Rng rng(seed);
    return (1.0 + 0.05 * rng.normal()) * std::pow(static_cast<double>(n), -0.5);
  };
  RateReport a = run_rate_experiment(cfg, hook);
  RateReport b = parse_rate_report(a.to_json());
  CHECK(b.experiment == a.experiment);
  CHECK(b.d == a.d);
  CHECK(b.p == a.p);
  CHECK(b.solver == "entropic");
  CHECK(b.epsilon == a.epsilon);
  CHECK(b.seed == a.seed);
  CHECK(b.quantization_slack == a.quantization_slack);
  CHECK(b.points.size() == a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(b.points[i].n == a.points[i].n);
    CHECK(b.points[i].h == a.points[i].h);
    CHECK(b.points[i].mean == a.points[i].mean);
    CHECK(b.points[i].std_error == a.points[i].std_error);
    CHECK(b.points[i].replicates == a.points[i].replicates);
    CHECK(b.points[i].seeds == a.points[i].seeds);
    CHECK(b.points[i].runtimes_ms == a.points[i].runtimes_ms);
  }
  CHECK(b.fit.slope == a.fit.slope);
  CHECK(b.fit.intercept == a.fit.intercept);
  CHECK(b.fit.r_squared == a.fit.r_squared);
  CHECK(b.slope_ci_lo == a.slope_ci_lo);
  CHECK(b.slope_ci_hi == a.slope_ci_hi);
  CHECK(b.has_log_model == a.has_log_model);
  CHECK(b.log_model_constant == a.log_model_constant);
  CHECK(b.log_model_rel_residual == a.log_model_rel_residual);
  CHECK(b.log_model_max_over_min == a.log_model_max_over_min);

  CHECK_THROWS_WITH_AS(parse_rate_report("{oops"), doctest::Contains("malformed"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_rate_report("{\"experiment\": \"x\"}"),
                       doctest::Contains("missing or mistyped"), std::invalid_argument);
}

TEST_CASE("lemma suite returns deterministic unviolated reports") {
  ExperimentConfig cfg;
  cfg.d = 1;
  cfg.density = random_density(1, 77);
  cfg.n_ladder = {64, 128};
  cfg.grid_n = 128;
  cfg.h_ladder = {0.25, 0.125, 0.0625};
  cfg.rosenthal_n = {16, 64};
  cfg.suite_instances = 3;
  cfg.reps = 5;
  cfg.seed = 21;
  cfg.jobs = 1;

  std::vector<BoundReport> reports = run_lemma_suite(cfg);
  // 3 peyre + 3 bias rungs + nonexplosion + maxmin + vh maxmin + 2 rosenthal
  // + rosenthal maxmin + decomposition + 3 smoothing-plan
  CHECK(reports.size() == 16);
  std::map<std::string, int> by_name;
  for (const BoundReport& r : reports) {
    CHECK(r.verdict != Verdict::violated);
    by_name[r.name] += 1;
  }
  CHECK(by_name["peyre-exact-p2"] == 3);
  CHECK(by_name["bias-ratio"] == 3);
  CHECK(by_name["bias-nonexplosion"] == 1);
  CHECK(by_name["bias-ladder-maxmin"] == 1);
  CHECK(by_name["vh-ladder-maxmin"] == 1);
  CHECK(by_name["rosenthal"] == 2);
  CHECK(by_name["rosenthal-ladder-maxmin"] == 1);
  CHECK(by_name["decomposition"] == 1);
  CHECK(by_name["smoothing-plan"] == 3);

  std::vector<BoundReport> again = run_lemma_suite(cfg);
  REQUIRE(again.size() == reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(again[i].name == reports[i].name);
    CHECK(again[i].lhs == reports[i].lhs);
    CHECK(again[i].rhs == reports[i].rhs);
    CHECK(again[i].ratio == reports[i].ratio);
    CHECK(again[i].verdict == reports[i].verdict);
  }

  cfg.p = 3.0;
  CHECK_THROWS_AS(run_lemma_suite(cfg), std::invalid_argument);
}
