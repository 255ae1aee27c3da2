#include "saddlelab/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>

#include <CLI11.hpp>

#include "saddlelab/errors.hpp"
#include "saddlelab/io.hpp"

namespace saddlelab {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<long> runs;
  unsigned workers = 0;
  bool dump_trajectories = false;

  std::string regime;
  std::optional<double> lipschitz, gradient_bound, injectivity, k_min, k_max;
  std::optional<int> p;
  bool json = false;
};

// Creates the output directory and proves it is writable before any work is
// done, so a bad --out never leaves partial results behind.
void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".saddlelab-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

void apply_overrides(ExperimentPlan& plan, const Options& opt) {
  if (opt.seed) plan.seed = *opt.seed;
  if (opt.runs) {
    if (*opt.runs < 1) throw ConfigError("--runs must be >= 1");
    plan.num_runs = *opt.runs;
  }
}

int cmd_run(const Options& opt, std::ostream& out) {
  ExperimentConfig cfg = parse_experiment_config(read_json_file(opt.config));
  apply_overrides(cfg.plan, opt);
  const fs::path dir(opt.out);
  prepare_output_dir(dir);

  const MonteCarloResult result = monte_carlo_avoidance(cfg.plan, {opt.workers, opt.dump_trajectories});
  if (opt.dump_trajectories) {
    const fs::path tdir = dir / "trajectories";
    fs::create_directories(tdir);
    for (size_t i = 0; i < result.trajectories.size(); ++i) {
      if (result.trajectories[i].points.empty()) continue;  // run failed
      char name[32];
      std::snprintf(name, sizeof name, "run_%06zu.csv", i);
      write_file_atomic(tdir / name, trajectory_csv(result.trajectories[i]));
    }
  }
  write_file_atomic(dir / "report.json", dump_json(to_json(result.report)));

  const AvoidanceReport& r = result.report;
  out << "runs " << r.num_runs << "  strict_saddle " << r.count_strict_saddle << "  other " << r.count_other
      << "  escaped " << r.count_escaped << "  undecided " << r.count_undecided << "  errors " << r.num_errors << "\n"
      << "fraction_to_strict_saddle " << r.fraction_to_strict_saddle << "  wilson95 [" << r.wilson.lo << ", "
      << r.wilson.hi << "]\n";
  return r.num_errors > 0 ? kExitRunErrors : kExitOk;
}

int cmd_scan(const Options& opt, std::ostream& out) {
  const ScanConfig cfg = parse_scan_config(read_json_file(opt.config));
  const fs::path dir(opt.out);
  prepare_output_dir(dir);
  const CostModel cost = builtin_cost(cfg.cost.name, cfg.cost.params, cfg.manifold);
  const SingularSet set = singular_alpha_scan(cost, cfg.manifold, cfg.map, cfg.point, cfg.alpha_max, cfg.grid_size);
  write_file_atomic(dir / "singular_set.json", dump_json(to_json(set)));
  out << "singular step sizes in (0, " << cfg.alpha_max << "]:";
  for (double a : set.alphas) out << ' ' << std::setprecision(12) << a;
  out << "\n";
  return kExitOk;
}

int cmd_traj(const Options& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = parse_experiment_config(read_json_file(opt.config));
  apply_overrides(cfg.plan, opt);
  const fs::path dir(opt.out);
  prepare_output_dir(dir);
  const ExperimentPlan& plan = cfg.plan;
  const CostModel cost = builtin_cost(plan.cost.name, plan.cost.params, plan.manifold);
  Point x0;
  if (cfg.x0) {
    x0 = *cfg.x0;
  } else {
    std::mt19937_64 rng(run_seed(plan.seed, 0));
    x0 = sample_initial_point(plan.sampler, plan.manifold, 0, rng);
  }
  try {
    const Trajectory traj = run_algorithm(plan.algorithm, cost, plan.manifold, x0, plan.stop);
    write_file_atomic(dir / "trajectory.csv", trajectory_csv(traj));
    const RunOutcome outcome = classify_limit(traj, cost, plan.manifold, plan.tolerances);
    out << "iterations " << traj.steps.size() << "  termination " << to_string(traj.termination)
        << "  classification " << to_string(outcome.classification) << "\n";
    return kExitOk;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitRunErrors;
  }
}

int cmd_bounds(const Options& opt, std::ostream& out) {
  BoundInputs in{opt.lipschitz, opt.gradient_bound, opt.injectivity, opt.k_min, opt.k_max, opt.p};
  const StepSizeBound b = step_size_bound(parse_bound_regime(opt.regime), in);
  if (opt.json) {
    out << dump_json(to_json(b));
    return kExitOk;
  }
  auto cell = [](const auto& v) {
    std::ostringstream s;
    if (v) {
      s << *v;
    } else {
      s << "-";
    }
    return s.str();
  };
  out << std::left << std::setw(20) << "regime" << std::setw(10) << "L" << std::setw(10) << "G" << std::setw(10)
      << "J" << std::setw(10) << "K_min" << std::setw(10) << "K_max" << std::setw(6) << "p"
      << "alpha_max\n";
  out << std::left << std::setw(20) << to_string(b.regime) << std::setw(10) << cell(in.lipschitz) << std::setw(10)
      << cell(in.gradient_bound) << std::setw(10) << cell(in.injectivity) << std::setw(10) << cell(in.k_min)
      << std::setw(10) << cell(in.k_max) << std::setw(6) << cell(in.stiefel_cols) << std::setprecision(12)
      << b.alpha_max << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Riemannian gradient-descent saddle-avoidance laboratory"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config file")->required();
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
  };
  auto* run = app.add_subcommand("run", "Monte Carlo avoidance experiment");
  add_common(run);
  run->add_option("--seed", opt.seed, "Override the plan seed");
  run->add_option("--runs", opt.runs, "Override the number of runs");
  run->add_option("--workers", opt.workers, "Worker threads (default: all cores)");
  run->add_flag("--dump-trajectories", opt.dump_trajectories, "Write trajectories/*.csv");

  auto* scan = app.add_subcommand("scan", "Singular step-size scan");
  add_common(scan);

  auto* traj = app.add_subcommand("traj", "Single trajectory to CSV");
  add_common(traj);
  traj->add_option("--seed", opt.seed, "Override the plan seed");

  auto* bounds = app.add_subcommand("bounds", "Step-size bound formulas");
  bounds->add_option("--regime", opt.regime, "hadamard | positive-curvature | pinched | stiefel | product-spheres")
      ->required();
  bounds->add_option("--L", opt.lipschitz, "Hessian Lipschitz constant");
  bounds->add_option("--G", opt.gradient_bound, "Gradient norm bound");
  bounds->add_option("--J", opt.injectivity, "Injectivity radius lower bound");
  bounds->add_option("--kmin,--K-min", opt.k_min, "Lower sectional curvature bound");
  bounds->add_option("--kmax,--K-max", opt.k_max, "Upper sectional curvature bound");
  bounds->add_option("--p", opt.p, "Stiefel column count");
  bounds->add_flag("--json", opt.json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(opt, out);
    if (*scan) return cmd_scan(opt, out);
    if (*traj) return cmd_traj(opt, out, err);
    return cmd_bounds(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunErrors;
  }
}

}  // namespace saddlelab
