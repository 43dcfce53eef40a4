#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "torusot/bounds.hpp"
#include "torusot/densities.hpp"
#include "torusot/kernel.hpp"
#include "torusot/torus.hpp"

using namespace torusot;

namespace {

bool has_note(const BoundReport& r, const std::string& needle) {
  for (const std::string& s : r.notes) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("verdict names") {
  CHECK(std::string(verdict_name(Verdict::holds)) == "holds");
  CHECK(std::string(verdict_name(Verdict::holds_within_slack)) == "holds-within-slack");
  CHECK(std::string(verdict_name(Verdict::violated)) == "violated");
}

TEST_CASE("report verdicts split exactly at rhs and rhs plus slack") {
  CHECK(make_bound_report("t", 1.0, 1.0, 0.1).verdict == Verdict::holds);
  CHECK(make_bound_report("t", 1.05, 1.0, 0.1).verdict == Verdict::holds_within_slack);
  CHECK(make_bound_report("t", 1.1, 1.0, 0.1).verdict == Verdict::holds_within_slack);
  CHECK(make_bound_report("t", 1.1000001, 1.0, 0.1).verdict == Verdict::violated);
  CHECK(make_bound_report("t", 0.0, 1.0, 0.0).verdict == Verdict::holds);

  CHECK(make_bound_report("t", 0.5, 2.0, 0.0).ratio == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(make_bound_report("t", 0.0, 2.0, 0.0).ratio == 0.0);
  CHECK(make_bound_report("t", 0.5, 0.0, 1.0).ratio == std::numeric_limits<double>::max());

  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(make_bound_report("t", inf, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_bound_report("t", 1.0, std::nan(""), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_bound_report("t", 1.0, 1.0, -inf), std::invalid_argument);
}

TEST_CASE("report serializes to the documented JSON schema") {
  BoundReport r = make_bound_report("sample-bound", 0.5, 1.0, 0.25);
  r.d = 2;
  r.p = 2.0;
  r.n = 512;
  r.h = 0.125;
  r.seed = 42;
  r.notes.push_back("first note");
  nlohmann::json j = nlohmann::json::parse(r.to_json());
  CHECK(j["name"] == "sample-bound");
  CHECK(j["lhs"] == 0.5);
  CHECK(j["rhs"] == 1.0);
  CHECK(j["ratio"] == 0.5);
  CHECK(j["slack_budget"] == 0.25);
  CHECK(j["verdict"] == "holds");
  CHECK(j["config"]["d"] == 2);
  CHECK(j["config"]["p"] == 2.0);
  CHECK(j["config"]["n"] == 512);
  CHECK(j["config"]["h"] == 0.125);
  CHECK(j["seed"] == 42);
  CHECK(j["notes"].size() == 1);
  CHECK(j["notes"][0] == "first note");
}

TEST_CASE("field measure conversion clips, renormalizes and rejects empty mass") {
  Grid g(1, 8);
  std::vector<double> vals = {2.0, -1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  GridField f(g, std::move(vals));
  DiscreteMeasure m = field_to_measure(f);
  m.validate();
  CHECK(m.count() == 8);
  CHECK(m.weights[1] == 0.0);  // clipped
  CHECK(m.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.weights[2] == doctest::Approx(0.25).epsilon(1e-12));
  double total = 0.0;
  for (double w : m.weights) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  for (std::int64_t i = 0; i < 8; ++i) CHECK(m.atom(i)[0] == g.node(i)[0]);

  std::vector<double> dead(8, -1.0);
  GridField zero(g, std::move(dead));
  CHECK_THROWS_AS(field_to_measure(zero), std::invalid_argument);
}

TEST_CASE("transport bound against the negative Sobolev norm holds on random pairs") {
  for (std::uint64_t rep = 0; rep < 6; ++rep) {
    DensitySpec f = random_density(1, 300 + rep);
    Grid g(1, 64);
    GridField gf = density_to_field(random_density(1, 400 + rep), g);
    BoundReport exact = peyre_check(f, gf, 2.0, g, PeyreMode::exact_p2);
    CHECK(exact.verdict != Verdict::violated);
    CHECK(exact.lhs > 0.0);
    CHECK(exact.ratio < 1.0);  // the inequality is far from tight on smooth pairs
    BoundReport cons = peyre_check(f, gf, 3.0, g, PeyreMode::consequence);
    CHECK(cons.verdict != Verdict::violated);
  }
  DensitySpec f2 = random_density(2, 310);
  Grid g2(2, 16);
  GridField gf2 = density_to_field(random_density(2, 410), g2);
  CHECK(peyre_check(f2, gf2, 2.0, g2, PeyreMode::exact_p2).verdict != Verdict::violated);
}

TEST_CASE("transport bound preconditions") {
  DensitySpec f = random_density(1, 320);
  Grid g(1, 64);
  GridField gf = density_to_field(random_density(1, 420), g);
  CHECK_THROWS_AS(peyre_check(f, gf, 3.0, g, PeyreMode::exact_p2), std::invalid_argument);
  CHECK_THROWS_AS(peyre_check(f, gf, 1.5, g, PeyreMode::consequence), std::invalid_argument);
  CHECK_THROWS_AS(peyre_check(f, gf, 2.0, Grid(1, 32), PeyreMode::exact_p2),
                  std::invalid_argument);

  std::vector<double> neg(64, 1.0);
  neg[5] = -0.5;
  neg[0] += 0.5;  // keep the mean at one
  CHECK_THROWS_AS(peyre_check(f, GridField(g, std::move(neg)), 2.0, g, PeyreMode::exact_p2),
                  std::invalid_argument);
  std::vector<double> off(64, 1.1);
  CHECK_THROWS_AS(peyre_check(f, GridField(g, std::move(off)), 2.0, g, PeyreMode::exact_p2),
                  std::invalid_argument);
}

TEST_CASE("smoothing bias ratio stays bounded over a dyadic ladder") {
  std::vector<DensityMode> modes(3);
  modes[0] = {{1, 0, 0}, 0.3, 0.4};
  modes[1] = {{4, 0, 0}, 0.2, 1.1};
  modes[2] = {{16, 0, 0}, 0.1, -0.5};
  DensitySpec f = cosine_mixture_density(1, modes);
  Grid g(1, 256);
  const KernelSpec& k = bump_kernel(1);
  double mx = 0.0, mn = std::numeric_limits<double>::max();
  for (double h : {0.25, 0.125, 0.0625}) {
    BoundReport r = bias_ratio(f, k, Bandwidth(h), 2.0, g);
    CHECK(r.verdict != Verdict::violated);
    CHECK(r.rhs == doctest::Approx(h * f.f_max).epsilon(1e-12));
    CHECK(has_note(r, "constant stripped"));
    mx = std::max(mx, r.ratio);
    mn = std::min(mn, r.ratio);
  }
  CHECK(mx / mn < 10.0);

  // with every mode at the lowest frequency the observed constant decays
  // linearly in h instead of stabilizing
  std::vector<DensityMode> low(1);
  low[0] = {{1, 0, 0}, 0.5, 0.0};
  DensitySpec fl = cosine_mixture_density(1, low);
  const double r_coarse = bias_ratio(fl, k, Bandwidth(0.25), 2.0, g).ratio;
  const double r_fine = bias_ratio(fl, k, Bandwidth(0.0625), 2.0, g).ratio;
  CHECK(r_coarse / r_fine > 3.0);

  CHECK_THROWS_AS(bias_ratio(f, bump_kernel(2), Bandwidth(0.125), 2.0, g), std::invalid_argument);
  CHECK_THROWS_AS(bias_ratio(f, k, Bandwidth(0.125), 1.5, g), std::invalid_argument);
}

TEST_CASE("moment bound on the smoothed fluctuation field") {
  DensitySpec f = random_density(1, 500);
  Grid g(1, 128);
  BoundReport r = rosenthal_check(f, bump_kernel(1), Bandwidth(0.0625), 2.0, 64, g, 30, 77);
  CHECK(r.verdict != Verdict::violated);
  CHECK(r.n == 64);
  CHECK(has_note(r, "statistical-power warning"));

  BoundReport r60 = rosenthal_check(f, bump_kernel(1), Bandwidth(0.0625), 2.0, 64, g, 60, 77);
  CHECK_FALSE(has_note(r60, "statistical-power warning"));

  CHECK_THROWS_AS(rosenthal_check(f, bump_kernel(1), Bandwidth(0.0625), 3.0, 64, g, 30, 77),
                  std::invalid_argument);
  CHECK_THROWS_AS(rosenthal_check(f, bump_kernel(1), Bandwidth(0.0625), 2.0, 0, g, 30, 77),
                  std::invalid_argument);
  CHECK_THROWS_AS(rosenthal_check(f, bump_kernel(1), Bandwidth(0.0625), 2.0, 64, g, 1, 77),
                  std::invalid_argument);
}

TEST_CASE("moment bound in three dimensions uses Monte Carlo integrals") {
  DensitySpec f = random_density(3, 501);
  Grid g(3, 16);
  BoundReport r = rosenthal_check(f, bump_kernel(3), Bandwidth(0.25), 2.0, 32, g, 5, 78);
  CHECK(r.verdict != Verdict::violated);
  CHECK(has_note(r, "Monte Carlo"));
}

TEST_CASE("two-term decomposition bound holds at the matched bandwidth") {
  DensitySpec f = random_density(1, 600);
  Grid g(1, 128);
  BoundReport r = decomposition_report(f, bump_kernel(1), 256, 2.0, g, 3, 99);
  CHECK(r.verdict != Verdict::violated);
  CHECK(r.h == doctest::Approx(1.0 / 256.0).epsilon(1e-12));
  CHECK(has_note(r, "exact spectral"));
  CHECK_FALSE(has_note(r, "entropically"));

  DensitySpec f2 = random_density(2, 601);
  Grid g2(2, 32);
  BoundReport r2 = decomposition_report(f2, bump_kernel(2), 100, 2.0, g2, 2, 100);
  CHECK(r2.verdict != Verdict::violated);
  CHECK(has_note(r2, "refined dual estimate"));
}

TEST_CASE("decomposition preconditions") {
  DensitySpec f = random_density(1, 610);
  Grid g(1, 64);
  const KernelSpec& k = bump_kernel(1);
  CHECK_THROWS_AS(decomposition_report(f, k, 1, 2.0, g, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(decomposition_report(f, k, 256, 1.5, g, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(decomposition_report(f, k, 256, 2.0, g, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(decomposition_report(f, bump_kernel(2), 256, 2.0, g, 3, 1),
                  std::invalid_argument);
}
