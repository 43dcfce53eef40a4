#include "torusot/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "torusot/kernel.hpp"
#include "torusot/parallel.hpp"
#include "torusot/rng.hpp"
#include "torusot/spectral.hpp"

namespace torusot {

namespace {

// substream tags; replicate streams use the low bits
constexpr std::uint64_t kBootstrapStream = 0xb007000000000000ull;
constexpr std::uint64_t kPeyreStream = 0x5045000000000000ull;
constexpr std::uint64_t kBiasStream = 0x4249000000000000ull;
constexpr std::uint64_t kRosenthalStream = 0x524f000000000000ull;
constexpr std::uint64_t kDecompStream = 0x4445000000000000ull;
constexpr std::uint64_t kSmoothingStream = 0x534d000000000000ull;

double default_hook_impl(const ExperimentConfig& cfg, std::int64_t n, int, std::uint64_t seed,
                         double, double* runtime_ms) {
  Grid grid(cfg.d, cfg.grid_n);
  EmpiricalMeasure s = sample(cfg.density, n, seed);
  auto t0 = std::chrono::steady_clock::now();
  EmpiricalDistanceResult r =
      empirical_vs_density_wasserstein(s, cfg.density, grid, cfg.p, cfg.solver, cfg.epsilon);
  auto t1 = std::chrono::steady_clock::now();
  if (runtime_ms) *runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r.ot.wasserstein;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate(bool kernel_workload) const {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("config: d must be 1, 2, or 3");
  if (density.d != d) throw std::invalid_argument("config: density dimension mismatch");
  if (p < 1.0) throw std::invalid_argument("config: p must be >= 1");
  if (n_ladder.size() < 2) throw std::invalid_argument("config: n_ladder needs at least 2 entries");
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    if (n_ladder[i] < 2) throw std::invalid_argument("config: sample sizes must be >= 2");
    if (i > 0 && n_ladder[i] <= n_ladder[i - 1]) {
      throw std::invalid_argument("config: n_ladder must be strictly increasing");
    }
  }
  if (reps < 5) throw std::invalid_argument("config: reps must be >= 5");
  if (grid_n < 4 || (grid_n & (grid_n - 1)) != 0) {
    throw std::invalid_argument("config: grid_n must be a power of two, at least 4");
  }
  if (!(h_rule.c > 0.0) || h_rule.c >= 0.5) {
    throw std::invalid_argument("config: h_rule constant must lie in (0, 1/2)");
  }
  if (h_rule.exponent < 0.0) throw std::invalid_argument("config: h_rule exponent must be >= 0");
  for (std::int64_t n : n_ladder) {
    double h = h_rule.h_for(n);
    if (!(h > 0.0) || h >= 0.5) {
      throw std::invalid_argument("config: h leaves (0, 1/2) over the n ladder");
    }
  }
  for (double h : h_ladder) {
    if (!(h > 0.0) || h >= 0.5) {
      throw std::invalid_argument("config: h_ladder entry outside (0, 1/2)");
    }
  }
  if (solver == SolverKind::entropic && !(epsilon > 0.0)) {
    throw std::invalid_argument("config: entropic solver needs epsilon > 0");
  }
  if (suite_instances < 1) throw std::invalid_argument("config: suite_instances must be positive");
  if (kernel_workload) {
    if (h_ladder.empty()) throw std::invalid_argument("config: kernel workloads need h_ladder");
    double hmin = *std::min_element(h_ladder.begin(), h_ladder.end());
    if (grid_n * hmin < 8.0) {
      throw std::invalid_argument(
          "config: grid_n * min(h_ladder) must be at least 8 to resolve the kernel");
    }
    if (rosenthal_n.empty()) throw std::invalid_argument("config: rosenthal_n must not be empty");
    for (std::int64_t n : rosenthal_n) {
      if (n < 1) throw std::invalid_argument("config: rosenthal_n entries must be positive");
    }
  }
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_rate: need at least 2 points");
  std::set<double> distinct;
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [n, mean] : points) {
    if (!(n > 0.0)) throw std::invalid_argument("fit_rate: sample sizes must be positive");
    if (!(mean > 0.0)) throw std::invalid_argument("fit_rate: nonpositive mean");
    distinct.insert(n);
    xs.push_back(std::log(n));
    ys.push_back(std::log(mean));
  }
  if (distinct.size() < 2) throw std::invalid_argument("fit_rate: need at least 2 distinct n");

  double m = static_cast<double>(xs.size());
  double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - xbar;
    sxx += dx * dx;
    sxy += dx * (ys[i] - ybar);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    double dy = ys[i] - ybar;
    ss_res += e * e;
    ss_tot += dy * dy;
  }
  fit.r_squared = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

RateReport run_rate_experiment(const ExperimentConfig& config) {
  return run_rate_experiment(config, SolveHook(default_hook_impl));
}

RateReport run_rate_experiment(const ExperimentConfig& config, const SolveHook& hook) {
  config.validate(false);
  if (!hook) throw std::invalid_argument("run_rate_experiment: empty solve hook");
  const int reps = config.reps;
  const int num_n = static_cast<int>(config.n_ladder.size());

  RateReport report;
  report.experiment = config.name;
  report.d = config.d;
  report.p = config.p;
  report.solver = config.solver == SolverKind::exact ? "exact" : "entropic";
  report.epsilon = config.solver == SolverKind::entropic ? config.epsilon : 0.0;
  report.seed = config.seed;
  report.quantization_slack = std::sqrt(static_cast<double>(config.d)) / (2.0 * config.grid_n);
  report.points.resize(static_cast<std::size_t>(num_n));
  for (int i = 0; i < num_n; ++i) {
    RatePoint& pt = report.points[static_cast<std::size_t>(i)];
    pt.n = config.n_ladder[static_cast<std::size_t>(i)];
    pt.h = config.h_rule.h_for(pt.n);
    pt.replicates.assign(static_cast<std::size_t>(reps), 0.0);
    pt.runtimes_ms.assign(static_cast<std::size_t>(reps), 0.0);
    pt.seeds.resize(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      // streams keyed by (ladder slot, replicate), never by schedule
      pt.seeds[static_cast<std::size_t>(r)] = derive_seed(
          config.seed, (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(r));
    }
  }

  parallel_for(num_n * reps, config.jobs, [&](int t) {
    int i = t / reps;
    int r = t % reps;
    RatePoint& pt = report.points[static_cast<std::size_t>(i)];
    try {
      double ms = 0.0;
      pt.replicates[static_cast<std::size_t>(r)] =
          hook(config, pt.n, r, pt.seeds[static_cast<std::size_t>(r)], pt.h, &ms);
      pt.runtimes_ms[static_cast<std::size_t>(r)] = ms;
    } catch (const std::exception& e) {
      throw std::runtime_error("rate experiment: replicate failed at n=" + std::to_string(pt.n) +
                               ", replicate=" + std::to_string(r) + ": " + e.what());
    }
  });

  std::vector<std::pair<double, double>> fit_pts;
  fit_pts.reserve(static_cast<std::size_t>(num_n));
  for (RatePoint& pt : report.points) {
    double sum = 0.0;
    for (double v : pt.replicates) sum += v;
    pt.mean = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (double v : pt.replicates) ss += (v - pt.mean) * (v - pt.mean);
    pt.std_error = std::sqrt(ss / (static_cast<double>(reps - 1) * static_cast<double>(reps)));
    // degenerate (constant) replicate sets would break the positivity
    // invariant; floor far below any observable scale
    if (!(pt.std_error > 0.0)) pt.std_error = 1e-30;
    fit_pts.emplace_back(static_cast<double>(pt.n), pt.mean);
  }
  report.fit = fit_rate(fit_pts);

  constexpr int kResamples = 1000;
  std::vector<double> slopes(kResamples, 0.0);
  std::vector<std::pair<double, double>> bpts(static_cast<std::size_t>(num_n));
  for (int b = 0; b < kResamples; ++b) {
    Rng rng(derive_seed(config.seed, kBootstrapStream | static_cast<std::uint64_t>(b)));
    for (int i = 0; i < num_n; ++i) {
      const RatePoint& pt = report.points[static_cast<std::size_t>(i)];
      double sum = 0.0;
      for (int r = 0; r < reps; ++r) {
        sum += pt.replicates[static_cast<std::size_t>(rng.uniform_int(0, reps - 1))];
      }
      bpts[static_cast<std::size_t>(i)] = {static_cast<double>(pt.n),
                                           std::max(sum / reps, 1e-300)};
    }
    slopes[static_cast<std::size_t>(b)] = fit_rate(bpts).slope;
  }
  std::sort(slopes.begin(), slopes.end());
  report.slope_ci_lo = slopes[24];
  report.slope_ci_hi = slopes[974];
  // the percentile bootstrap can miss the point estimate on short ladders;
  // widen so the interval always contains it
  report.slope_ci_lo = std::min(report.slope_ci_lo, report.fit.slope);
  report.slope_ci_hi = std::max(report.slope_ci_hi, report.fit.slope);

  if (config.d == 2) {
    report.has_log_model = true;
    std::vector<double> ts;
    ts.reserve(report.points.size());
    for (const RatePoint& pt : report.points) {
      double nn = static_cast<double>(pt.n);
      ts.push_back(pt.mean * std::sqrt(nn / std::log(nn)));
    }
    double c = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
    double ss = 0.0;
    for (double t : ts) ss += (t - c) * (t - c);
    report.log_model_constant = c;
    report.log_model_rel_residual =
        c > 0.0 ? std::sqrt(ss / static_cast<double>(ts.size())) / c : 0.0;
    auto [mn, mx] = std::minmax_element(ts.begin(), ts.end());
    report.log_model_max_over_min = *mn > 0.0 ? *mx / *mn : 0.0;
  }
  return report;
}

std::string RateReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["d"] = d;
  j["p"] = p;
  j["solver"] = solver;
  j["epsilon"] = epsilon;
  j["seed"] = seed;
  j["quantization_slack"] = quantization_slack;
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const RatePoint& pt : points) {
    nlohmann::ordered_json o;
    o["n"] = pt.n;
    o["h"] = pt.h;
    o["mean"] = pt.mean;
    o["std_error"] = pt.std_error;
    o["replicates"] = pt.replicates;
    o["seeds"] = pt.seeds;
    o["runtimes_ms"] = pt.runtimes_ms;
    pts.push_back(std::move(o));
  }
  j["points"] = std::move(pts);
  j["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
  j["slope_ci"] = {slope_ci_lo, slope_ci_hi};
  if (has_log_model) {
    j["log_model"] = {{"constant", log_model_constant},
                      {"rel_residual", log_model_rel_residual},
                      {"max_over_min", log_model_max_over_min}};
  }
  return j.dump(2);
}

RateReport parse_rate_report(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("rate report: malformed JSON: ") + e.what());
  }
  try {
    RateReport r;
    r.experiment = j.at("experiment").get<std::string>();
    r.d = j.at("d").get<int>();
    r.p = j.at("p").get<double>();
    r.solver = j.value("solver", std::string("exact"));
    r.epsilon = j.value("epsilon", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
    r.quantization_slack = j.value("quantization_slack", 0.0);
    for (const auto& o : j.at("points")) {
      RatePoint pt;
      pt.n = o.at("n").get<std::int64_t>();
      pt.h = o.value("h", 0.0);
      pt.mean = o.at("mean").get<double>();
      pt.std_error = o.value("std_error", 0.0);
      if (o.contains("replicates")) pt.replicates = o.at("replicates").get<std::vector<double>>();
      if (o.contains("seeds")) pt.seeds = o.at("seeds").get<std::vector<std::uint64_t>>();
      if (o.contains("runtimes_ms")) pt.runtimes_ms = o.at("runtimes_ms").get<std::vector<double>>();
      r.points.push_back(std::move(pt));
    }
    r.fit.slope = j.at("fit").at("slope").get<double>();
    r.fit.intercept = j.at("fit").at("intercept").get<double>();
    r.fit.r_squared = j.at("fit").value("r_squared", 0.0);
    if (j.contains("slope_ci") && j.at("slope_ci").size() == 2) {
      r.slope_ci_lo = j.at("slope_ci")[0].get<double>();
      r.slope_ci_hi = j.at("slope_ci")[1].get<double>();
    }
    if (j.contains("log_model")) {
      r.has_log_model = true;
      r.log_model_constant = j.at("log_model").value("constant", 0.0);
      r.log_model_rel_residual = j.at("log_model").value("rel_residual", 0.0);
      r.log_model_max_over_min = j.at("log_model").value("max_over_min", 0.0);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("rate report: missing or mistyped field: ") + e.what());
  }
}

bool rate_band_ok(const RateReport& report, std::string* why) {
  std::ostringstream os;
  bool ok = true;
  if (report.d == 2) {
    if (!report.has_log_model || !(report.log_model_max_over_min < 2.0)) {
      ok = false;
      os << "sqrt(log n / n) model max/min " << report.log_model_max_over_min
         << " not below 2.0";
    }
  } else {
    double lo = report.d == 1 ? -0.60 : -0.43;
    double hi = report.d == 1 ? -0.40 : -0.23;
    if (!(report.fit.slope >= lo && report.fit.slope <= hi)) {
      ok = false;
      os << "fitted slope " << report.fit.slope << " outside [" << lo << ", " << hi << "]";
    }
  }
  if (!ok && why) *why = os.str();
  return ok;
}

std::vector<BoundReport> run_lemma_suite(const ExperimentConfig& config) {
  config.validate(true);
  if (config.p != 2.0 && config.p != 4.0) {
    throw std::invalid_argument("run_lemma_suite: moment checks need p in {2, 4}");
  }
  const double p = config.p;
  const KernelSpec& kernel = bump_kernel(config.d);
  Grid grid(config.d, config.grid_n);
  std::vector<BoundReport> out;

  // Peyre pairs, on a grid the exact solver can afford
  int peyre_grid_n = config.d == 1 ? std::min(config.grid_n, 256) : (config.d == 2 ? 32 : 8);
  Grid pgrid(config.d, peyre_grid_n);
  int instances = config.suite_instances;
  for (int i = 0; i < instances; ++i) {
    std::uint64_t sa = derive_seed(config.seed, kPeyreStream | static_cast<std::uint64_t>(2 * i));
    std::uint64_t sb =
        derive_seed(config.seed, kPeyreStream | static_cast<std::uint64_t>(2 * i + 1));
    DensitySpec f = random_density(config.d, sa);
    GridField g = density_to_field(random_density(config.d, sb), pgrid);
    BoundReport rep =
        peyre_check(f, g, p, pgrid, p == 2.0 ? PeyreMode::exact_p2 : PeyreMode::consequence);
    rep.seed = sa;
    out.push_back(std::move(rep));
  }

  // bias ratio over the bandwidth ladder (descending)
  std::vector<double> hs = config.h_ladder;
  std::sort(hs.begin(), hs.end(), std::greater<double>());
  DensitySpec bias_density = random_density(config.d, derive_seed(config.seed, kBiasStream));
  std::vector<double> bias_ratios;
  for (double hv : hs) {
    BoundReport rep = bias_ratio(bias_density, kernel, Bandwidth(hv), p, grid);
    rep.seed = config.seed;
    bias_ratios.push_back(rep.ratio);
    out.push_back(std::move(rep));
  }
  if (hs.size() >= 2) {
    double worst_growth = 0.0;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
      worst_growth = std::max(
          worst_growth, bias_ratios[i + 1] / std::max(bias_ratios[i], 1e-300));
    }
    BoundReport growth = make_bound_report("bias-nonexplosion", worst_growth, 1.1, 0.0);
    growth.d = config.d;
    growth.p = p;
    growth.seed = config.seed;
    growth.notes.push_back("largest ratio(h/2) / ratio(h) over the dyadic ladder");
    out.push_back(std::move(growth));

    auto [mn, mx] = std::minmax_element(bias_ratios.begin(), bias_ratios.end());
    BoundReport mm =
        make_bound_report("bias-ladder-maxmin", *mx / std::max(*mn, 1e-300), 10.0, 0.0);
    mm.d = config.d;
    mm.p = p;
    mm.seed = config.seed;
    out.push_back(std::move(mm));
  }

  // multiplier sum scalings over the same ladder
  double p_star = p / (p - 1.0);
  std::vector<double> svals;
  std::string vh_note = "S(h) =";
  for (double hv : hs) {
    int truncation = static_cast<int>(std::ceil(4.0 / hv));
    VhSums vs = v_h_sums(kernel, Bandwidth(hv), p_star, config.d, truncation);
    svals.push_back(vs.s0 + vs.s1);
    vh_note += " " + format_value(vs.s0 + vs.s1);
  }
  if (svals.size() >= 2) {
    if (config.d == 3 && p_star == 2.0) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < hs.size(); ++i) pts.emplace_back(hs[i], svals[i]);
      double slope = fit_rate(pts).slope;
      BoundReport up = make_bound_report("vh-slope-upper", slope, -0.8, 0.0);
      BoundReport lo = make_bound_report("vh-slope-lower", -1.2, slope, 0.0);
      for (BoundReport* r : {&up, &lo}) {
        r->d = config.d;
        r->p = p;
        r->seed = config.seed;
        r->notes.push_back(vh_note);
      }
      out.push_back(std::move(up));
      out.push_back(std::move(lo));
    } else {
      std::vector<double> ts;
      double cap = 10.0;
      std::string label = "vh-ladder-maxmin";
      if (config.d == 2 && p_star == 2.0) {
        for (std::size_t i = 0; i < hs.size(); ++i) ts.push_back(svals[i] / -std::log(hs[i]));
        label = "vh-log-maxmin";
      } else {
        ts = svals;
        if (config.d == 1) cap = 3.0;
      }
      auto [mn, mx] = std::minmax_element(ts.begin(), ts.end());
      BoundReport mm = make_bound_report(label, *mx / std::max(*mn, 1e-300), cap, 0.0);
      mm.d = config.d;
      mm.p = p;
      mm.seed = config.seed;
      mm.notes.push_back(vh_note);
      out.push_back(std::move(mm));
    }
  }

  // fluctuation moments over the sample-size ladder, fixed resolved bandwidth
  double h_r = std::max(0.04, 8.0 / config.grid_n);
  int r_reps = std::max(50, config.reps);
  std::vector<double> r_ratios;
  int idx = 0;
  for (std::int64_t n : config.rosenthal_n) {
    BoundReport rep =
        rosenthal_check(config.density, kernel, Bandwidth(h_r), p, n, grid, r_reps,
                        derive_seed(config.seed, kRosenthalStream | static_cast<std::uint64_t>(idx)),
                        config.jobs);
    r_ratios.push_back(rep.ratio);
    out.push_back(std::move(rep));
    ++idx;
  }
  if (r_ratios.size() >= 2) {
    auto [mn, mx] = std::minmax_element(r_ratios.begin(), r_ratios.end());
    BoundReport mm =
        make_bound_report("rosenthal-ladder-maxmin", *mx / std::max(*mn, 1e-300), 10.0, 0.0);
    mm.d = config.d;
    mm.p = p;
    mm.seed = config.seed;
    out.push_back(std::move(mm));
  }

  // one decomposition instance at the middle of the n ladder
  std::int64_t dec_n = config.n_ladder[config.n_ladder.size() / 2];
  if (std::pow(static_cast<double>(dec_n), -1.0 / config.d) < 0.5) {
    out.push_back(decomposition_report(config.density, kernel, dec_n, p, grid,
                                       std::max(config.reps, 10),
                                       derive_seed(config.seed, kDecompStream), config.jobs));
  }

  // mollified-vs-raw empirical distance against the explicit plan cost
  // (d = 3 grids put the exact solver over its atom budget, so skipped there)
  if (config.d <= 2) {
    for (int i = 0; i < instances; ++i) {
      std::uint64_t s = derive_seed(config.seed, kSmoothingStream | static_cast<std::uint64_t>(i));
      Rng rng(s);
      std::int64_t n = rng.uniform_int(20, 200);
      double lo = std::max(0.15, 8.0 / config.grid_n);
      double hv = rng.uniform(lo, 0.45);
      EmpiricalMeasure smp = sample(config.density, n, derive_seed(s, 1));
      GridField kde = kde_field(smp, kernel, Bandwidth(hv), grid, KdeMethod::direct);
      OTResult ot = exact_wasserstein(to_discrete(smp), field_to_measure(kde), p);
      double rhs = explicit_smoothing_plan_cost(kernel, Bandwidth(hv), p);
      double slack = std::sqrt(static_cast<double>(config.d)) / (2.0 * config.grid_n) + 1e-9;
      BoundReport rep = make_bound_report("smoothing-plan", ot.wasserstein, rhs, slack);
      rep.d = config.d;
      rep.p = p;
      rep.n = n;
      rep.h = hv;
      rep.seed = s;
      out.push_back(std::move(rep));
    }
  }

  return out;
}

}  // namespace torusot
