#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "torusot/bounds.hpp"
#include "torusot/config.hpp"
#include "torusot/experiments.hpp"
#include "torusot/io.hpp"
#include "torusot/kernel.hpp"
#include "torusot/rng.hpp"
#include "torusot/spectral.hpp"
#include "torusot/svg.hpp"

namespace fs = std::filesystem;
using namespace torusot;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool deterministic = false;
  int jobs = 0;
  std::string solver;
  double epsilon = 0.0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* solver_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config file")->required();
  cmd->add_option("--out", o.out_dir, "output directory");
  o.seed_opt = cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_flag("--deterministic-names", o.deterministic,
                "omit timestamps from output names and zero runtimes");
  o.jobs_opt = cmd->add_option("--jobs", o.jobs, "worker threads (0 = hardware)");
  o.solver_opt = cmd->add_option("--solver", o.solver, "exact|entropic")
                     ->check(CLI::IsMember({"exact", "entropic"}));
  o.epsilon_opt = cmd->add_option("--epsilon", o.epsilon, "entropic regularization");
}

ExperimentConfig load_with_overrides(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o.config_path);
  if (o.seed_opt->count() > 0) cfg.seed = o.seed;
  if (o.solver_opt->count() > 0) {
    cfg.solver = o.solver == "exact" ? SolverKind::exact : SolverKind::entropic;
  }
  if (o.epsilon_opt->count() > 0) cfg.epsilon = o.epsilon;
  if (o.jobs_opt->count() > 0) {
    cfg.jobs = o.jobs;
  } else if (const char* env = std::getenv("TORUS_OT_LAB_JOBS")) {
    try {
      cfg.jobs = std::stoi(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("TORUS_OT_LAB_JOBS must be an integer");
    }
  }
  return cfg;
}

void write_text(const CommonOpts& o, const std::string& stem, const std::string& ext,
                const std::string& contents) {
  fs::create_directories(o.out_dir);
  fs::path path = fs::path(o.out_dir) / output_name(stem, ext, o.deterministic);
  atomic_write(path.string(), contents);
  std::cout << "wrote " << path.string() << "\n";
}

std::string reports_json(const std::vector<BoundReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const BoundReport& r : reports) arr.push_back(nlohmann::ordered_json::parse(r.to_json()));
  return arr.dump(2) + "\n";
}

int finish_reports(const CommonOpts& o, const std::string& stem,
                   const std::vector<BoundReport>& reports) {
  write_text(o, stem, "json", reports_json(reports));
  int violated = 0;
  for (const BoundReport& r : reports) {
    if (r.verdict == Verdict::violated) ++violated;
    std::cout << r.name << ": " << verdict_name(r.verdict) << " (lhs=" << r.lhs
              << ", rhs=" << r.rhs << ", ratio=" << r.ratio << ")\n";
  }
  if (violated > 0) {
    std::cerr << violated << " of " << reports.size() << " checks violated\n";
    return 1;
  }
  std::cout << "all " << reports.size() << " checks non-violated\n";
  return 0;
}

int cmd_rate(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  cfg.validate(false);
  RateReport report = run_rate_experiment(cfg);
  if (o.deterministic) {
    for (RatePoint& pt : report.points) std::fill(pt.runtimes_ms.begin(), pt.runtimes_ms.end(), 0.0);
  }
  write_text(o, cfg.name, "csv", rate_csv(report));
  write_text(o, cfg.name, "json", report.to_json() + "\n");
  std::cout << "fitted slope " << report.fit.slope << " (CI [" << report.slope_ci_lo << ", "
            << report.slope_ci_hi << "], r^2 " << report.fit.r_squared << ")\n";
  if (report.has_log_model) {
    std::cout << "sqrt(log n / n) model: constant " << report.log_model_constant
              << ", max/min " << report.log_model_max_over_min << "\n";
  }
  std::string why;
  if (!rate_band_ok(report, &why)) {
    std::cerr << "rate band missed: " << why << "\n";
    return 1;
  }
  std::cout << "rate band ok\n";
  return 0;
}

int cmd_verify_lemma(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  return finish_reports(o, cfg.name + "-suite", run_lemma_suite(cfg));
}

int cmd_bias(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  cfg.validate(true);
  if (cfg.p < 2.0) throw std::invalid_argument("bias: p must be >= 2");
  const KernelSpec& kernel = bump_kernel(cfg.d);
  Grid grid(cfg.d, cfg.grid_n);
  std::vector<double> hs = cfg.h_ladder;
  std::sort(hs.begin(), hs.end(), std::greater<double>());
  std::vector<BoundReport> reports;
  std::vector<double> ratios;
  for (double hv : hs) {
    BoundReport rep = bias_ratio(cfg.density, kernel, Bandwidth(hv), cfg.p, grid);
    rep.seed = cfg.seed;
    ratios.push_back(rep.ratio);
    reports.push_back(std::move(rep));
  }
  if (ratios.size() >= 2) {
    auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    BoundReport mm =
        make_bound_report("bias-ladder-maxmin", *mx / std::max(*mn, 1e-300), 10.0, 0.0);
    mm.d = cfg.d;
    mm.p = cfg.p;
    mm.seed = cfg.seed;
    reports.push_back(std::move(mm));
  }
  return finish_reports(o, cfg.name + "-bias", reports);
}

int cmd_fluctuation(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  cfg.validate(true);
  if (cfg.p != 2.0 && cfg.p != 4.0) throw std::invalid_argument("fluctuation: p must be 2 or 4");
  const KernelSpec& kernel = bump_kernel(cfg.d);
  Grid grid(cfg.d, cfg.grid_n);
  double h = std::max(0.04, 8.0 / cfg.grid_n);
  int reps = std::max(50, cfg.reps);
  std::vector<BoundReport> reports;
  std::vector<double> ratios;
  int idx = 0;
  for (std::int64_t n : cfg.rosenthal_n) {
    BoundReport rep = rosenthal_check(cfg.density, kernel, Bandwidth(h), cfg.p, n, grid, reps,
                                      derive_seed(cfg.seed, static_cast<std::uint64_t>(idx)),
                                      cfg.jobs);
    ratios.push_back(rep.ratio);
    reports.push_back(std::move(rep));
    ++idx;
  }
  if (ratios.size() >= 2) {
    auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    BoundReport mm =
        make_bound_report("rosenthal-ladder-maxmin", *mx / std::max(*mn, 1e-300), 10.0, 0.0);
    mm.d = cfg.d;
    mm.p = cfg.p;
    mm.seed = cfg.seed;
    reports.push_back(std::move(mm));
  }
  return finish_reports(o, cfg.name + "-fluctuation", reports);
}

int cmd_norms(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  int grid_n = std::min(cfg.grid_n, cfg.d == 1 ? 4096 : (cfg.d == 2 ? 256 : 64));
  Grid grid(cfg.d, grid_n);
  double lo_bound = kTwoPi / std::sqrt(static_cast<double>(cfg.d));
  double worst_hi = 0.0, worst_lo = std::numeric_limits<double>::max();
  int instances = std::max(cfg.suite_instances, 20);
  for (int i = 0; i < instances; ++i) {
    Rng rng(derive_seed(cfg.seed, 0x4e4f524d00000000ull | static_cast<std::uint64_t>(i)));
    GridField field{grid, std::vector<double>(static_cast<std::size_t>(grid.size()))};
    for (double& v : field.values) v = rng.normal();
    double mean = field.mean();
    for (double& v : field.values) v -= mean;
    double ratio = riesz_surrogate_norm(field, 2.0) / sobolev_neg_norm_exact_p2(field);
    worst_hi = std::max(worst_hi, ratio);
    worst_lo = std::min(worst_lo, ratio);
  }
  std::vector<BoundReport> reports;
  BoundReport up = make_bound_report("sandwich-upper", worst_hi, kTwoPi, 1e-9);
  BoundReport lo = make_bound_report("sandwich-lower", lo_bound, worst_lo, 1e-9);
  for (BoundReport* r : {&up, &lo}) {
    r->d = cfg.d;
    r->p = 2.0;
    r->n = instances;
    r->seed = cfg.seed;
    r->notes.push_back("riesz surrogate over exact H^-1 norm on random mean-zero fields");
  }
  reports.push_back(std::move(up));
  reports.push_back(std::move(lo));
  return finish_reports(o, cfg.name + "-norms", reports);
}

int cmd_plot(const std::string& input, std::string out_file, double reference_slope,
             bool have_reference) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw std::invalid_argument("plot: cannot read " + input);
  std::ostringstream buf;
  buf << in.rdbuf();
  RateReport report = parse_rate_report(buf.str());
  if (!have_reference) reference_slope = -1.0 / report.d;
  if (out_file.empty()) out_file = fs::path(input).replace_extension(".svg").string();
  if (fs::path(out_file).has_parent_path()) fs::create_directories(fs::path(out_file).parent_path());
  atomic_write(out_file, render_plot(report, reference_slope));
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"empirical-measure transport rate laboratory on the flat torus"};
  app.require_subcommand(1);

  CommonOpts rate_o, lemma_o, bias_o, fluct_o, norms_o;
  add_common(app.add_subcommand("rate", "run a rate experiment and fit the decay exponent"),
             rate_o);
  add_common(app.add_subcommand("verify-lemma", "run the full inequality suite"), lemma_o);
  add_common(app.add_subcommand("bias", "smoothing bias ratios over the bandwidth ladder"),
             bias_o);
  add_common(
      app.add_subcommand("fluctuation", "moment bounds for the smoothed empirical fluctuation"),
      fluct_o);
  add_common(app.add_subcommand("norms", "norm sandwich checks on random fields"), norms_o);

  std::string plot_input, plot_out;
  double reference_slope = 0.0;
  CLI::App* plot = app.add_subcommand("plot", "render a rate report as a log-log SVG");
  plot->add_option("--input", plot_input, "rate report JSON")->required();
  plot->add_option("--out", plot_out, "output SVG path (default: input with .svg)");
  CLI::Option* ref_opt =
      plot->add_option("--reference-slope", reference_slope, "slope of the dashed guide");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("rate")) return cmd_rate(rate_o);
    if (app.got_subcommand("verify-lemma")) return cmd_verify_lemma(lemma_o);
    if (app.got_subcommand("bias")) return cmd_bias(bias_o);
    if (app.got_subcommand("fluctuation")) return cmd_fluctuation(fluct_o);
    if (app.got_subcommand("norms")) return cmd_norms(norms_o);
    if (app.got_subcommand("plot")) {
      return cmd_plot(plot_input, plot_out, reference_slope, ref_opt->count() > 0);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
