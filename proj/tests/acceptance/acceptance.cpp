// Acceptance gate: one PASS/FAIL line per criterion. `--criterion N` runs one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "saddlelab/analysis.hpp"
#include "saddlelab/experiments.hpp"
#include "saddlelab/io.hpp"

using namespace saddlelab;

namespace {

const std::filesystem::path kConfigs = SADDLELAB_CONFIGS;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "] ";
    }
  }
};

ExperimentPlan load_plan(const std::string& name) {
  return parse_experiment_config(read_json_file(kConfigs / name)).plan;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

CostModel cost_of(const ExperimentPlan& plan) { return builtin_cost(plan.cost.name, plan.cost.params, plan.manifold); }

Mat diag(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

Verdict counterexample_collapse() {
  Verdict v;
  const ExperimentPlan plan = load_plan("interp2d_unit_step.json");
  const auto start = std::chrono::steady_clock::now();
  const MonteCarloResult res = monte_carlo_avoidance(plan, {.workers = 0, .keep_trajectories = true});
  const double elapsed = seconds_since(start);
  long one_step = 0;
  for (const Trajectory& t : res.trajectories) {
    if (t.points.size() >= 2 && t.points[1].norm() <= 1e-12) ++one_step;
  }
  v.detail << "strict_saddle " << res.report.count_strict_saddle << "/" << res.report.num_runs << ", one-step "
           << one_step << ", " << elapsed << " s";
  v.require(res.report.num_runs == 1000 && res.report.count_strict_saddle == 1000, "1000/1000 strict saddle");
  v.require(one_step == 1000, "every ||x1|| <= 1e-12");
  v.require(elapsed < 1.0, "runtime < 1 s");
  return v;
}

Verdict perturbed_alpha() {
  Verdict v;
  for (double alpha : {0.9, 1.1}) {
    ExperimentPlan plan = load_plan("interp2d_unit_step.json");
    plan.algorithm.alpha = alpha;
    plan.stop.max_iters = 10000;
    const auto start = std::chrono::steady_clock::now();
    const AvoidanceReport r = monte_carlo_avoidance(plan).report;
    const double elapsed = seconds_since(start);
    v.detail << "alpha " << alpha << ": strict_saddle " << r.count_strict_saddle << "/" << r.num_runs << " in "
             << elapsed << " s; ";
    v.require(r.count_strict_saddle <= 1, "alpha " + std::to_string(alpha) + " strict saddle <= 1");
    v.require(elapsed < 30.0, "runtime < 30 s");
  }
  return v;
}

Verdict armijo_counterexample() {
  Verdict v;
  ExperimentPlan plan = load_plan("interp2d_armijo.json");
  plan.algorithm.line_search.alpha_bar = 1.0;
  const MonteCarloResult unit = monte_carlo_avoidance(plan, {.workers = 0, .keep_trajectories = true});
  long reached = 0;
  for (const Trajectory& t : unit.trajectories) {
    if (!t.steps.empty() && t.steps[0] == 1.0 && t.points.back().norm() <= 1e-12) ++reached;
  }
  plan.algorithm.line_search.alpha_bar = 0.97;
  const AvoidanceReport perturbed = monte_carlo_avoidance(plan).report;
  v.detail << "alpha_bar 1: " << reached << "/" << unit.report.num_runs << " at origin; alpha_bar 0.97: strict_saddle "
           << perturbed.count_strict_saddle << "/" << perturbed.num_runs;
  v.require(reached == 1000, "1000/1000 reach the origin at alpha_bar 1");
  v.require(perturbed.count_strict_saddle <= 1, "alpha_bar 0.97 strict saddle <= 1");
  return v;
}

Verdict cubic_footnote() {
  Verdict v;
  const auto line = ManifoldSpec::euclidean(1);
  const CostModel cubic = builtin_cost("cubic1d", {}, line);
  LineSearchConfig ls;
  ls.alpha_bar = 0.3;
  ls.tau = 0.5;
  ls.r = 0.5;
  StopRule stop;
  stop.grad_tol = 1e-300;
  stop.max_iters = 100000;
  for (double x0 : {0.1, 0.3, 0.49}) {
    const Trajectory t =
        stabilized_armijo_run(cubic, line, RetractionKind::Exponential, Vec::Constant(1, x0), ls, stop);
    bool all_equal = !t.steps.empty();
    for (double s : t.steps) all_equal = all_equal && s == 0.3;
    const double final_x = t.points.back()(0);
    v.detail << "x0 " << x0 << ": steps all 0.3 " << (all_equal ? "yes" : "no") << ", |x_final| " << std::abs(final_x)
             << " after " << t.steps.size() << "; ";
    v.require(all_equal, "every step equals 0.3");
    v.require(std::abs(final_x) <= 1e-6, "|x_final| <= 1e-6 from x0 " + std::to_string(x0));
  }
  return v;
}

Verdict step_bounds() {
  Verdict v;
  const double stiefel =
      step_size_bound(BoundRegime::Stiefel, {.lipschitz = 1.0, .stiefel_cols = 1}).alpha_max;
  v.detail << "stiefel " << stiefel;
  v.require(std::abs(stiefel - 0.40189) <= 1e-4, "stiefel p=1 L=1 within 1e-4 of 0.40189");
  for (double lip : {0.5, 1.0, 3.0, 7.25}) {
    v.require(step_size_bound(BoundRegime::Hadamard, {.lipschitz = lip}).alpha_max == 1.0 / lip, "hadamard 1/L");
    v.require(step_size_bound(BoundRegime::ProductSpheres, {.lipschitz = lip}).alpha_max == 1.0 / lip,
              "product spheres 1/L");
    const double positive = step_size_bound(BoundRegime::PositiveCurvature, {.lipschitz = lip,
                                                                              .gradient_bound = lip,
                                                                              .injectivity = 1e12,
                                                                              .k_max = 1e-12})
                                .alpha_max;
    v.require(std::abs(positive - 1.0 / lip) <= 1e-6, "positive curvature limit 1/L");
    if (lip == 1.0) v.detail << ", positive-curvature limit " << positive;
  }
  return v;
}

Verdict jacobi_identity() {
  Verdict v;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  auto gaussian = [&](int n) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    return z;
  };
  const auto s2 = ManifoldSpec::sphere(2);
  const auto h2 = ManifoldSpec::hyperbolic(2);
  double worst_sphere = 0.0, worst_hyperbolic = 0.0, min_eig = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const Point x = project_point(s2, gaussian(3));
    Tangent dir = project_tangent(s2, x, gaussian(3));
    dir /= norm(s2, x, dir);
    const double len = std::uniform_real_distribution<double>(0.1, std::numbers::pi - 0.1)(rng);
    worst_sphere = std::max(worst_sphere, hess_dist_consistency(s2, x, len * dir));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const Point x = project_point(h2, gaussian(3));
    Tangent dir = project_tangent(h2, x, gaussian(3));
    dir /= norm(h2, x, dir);
    const double len = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    const Tangent step = len * dir;
    worst_hyperbolic = std::max(worst_hyperbolic, hess_dist_consistency(h2, x, step));
    const Mat hess = hess_half_sq_dist(h2, x, retract(h2, RetractionKind::Exponential, x, step));
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (hess + hess.transpose())).eigenvalues().minCoeff());
  }
  v.detail << "max gap sphere " << worst_sphere << ", hyperbolic " << worst_hyperbolic << ", min hyperbolic eigenvalue "
           << min_eig;
  v.require(worst_sphere <= 1e-5, "sphere consistency <= 1e-5");
  v.require(worst_hyperbolic <= 1e-5, "hyperbolic consistency <= 1e-5");
  v.require(min_eig >= 1.0 - 1e-6, "hyperbolic eigenvalues >= 1 - 1e-6");
  return v;
}

Verdict singular_scan() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const auto e5 = ManifoldSpec::euclidean(5);
  const MapKind map = MapKind::fixed_step(RetractionKind::Exponential);
  double worst_root = 0.0, worst_det = 0.0, worst_singular = 0.0;
  long mismatched = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Mat a(5, 5);
    for (int i = 0; i < 25; ++i) a(i) = normal(rng);
    a = 0.5 * (a + a.transpose()).eval();
    CostParams params;
    params.matrix = a;
    const CostModel c = builtin_cost("quadratic", params, e5);
    Vec x(5);
    for (int i = 0; i < 5; ++i) x(i) = normal(rng);

    std::vector<double> expected;
    const Vec eigenvalues = Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues();
    for (double lambda : eigenvalues) {
      if (lambda > 0 && 1.0 / lambda <= 2.0) expected.push_back(1.0 / lambda);
    }
    std::sort(expected.begin(), expected.end());
    const SingularSet found = singular_alpha_scan(c, e5, map, x, 2.0);
    if (found.alphas.size() != expected.size()) {
      ++mismatched;
      continue;
    }
    for (size_t k = 0; k < expected.size(); ++k) {
      worst_root = std::max(worst_root, std::abs(found.alphas[k] - expected[k]));
      const Vec sv = Eigen::JacobiSVD<Mat>(Mat::Identity(5, 5) - found.alphas[k] * a).singularValues();
      worst_singular = std::max(worst_singular, sv(4) / sv(0));
    }
    const auto d0 = iteration_map_differential(c, e5, map, x, 0.0, DifferentialMethod::ClosedFormEuclidean);
    worst_det = std::max(worst_det, std::abs(d0.entries.determinant() - 1.0));
  }
  v.detail << "root-count mismatches " << mismatched << ", max root error " << worst_root
           << ", max sigma_min/sigma_max at roots " << worst_singular << ", max |det(alpha=0) - 1| " << worst_det;
  v.require(mismatched == 0, "root counts match");
  v.require(worst_root <= 1e-8, "roots within 1e-8");
  v.require(worst_singular <= 1e-12, "I - alpha A singular at every root");
  v.require(worst_det <= 1e-12, "det at alpha 0 within 1e-12 of 1");
  return v;
}

Verdict critical_differential() {
  Verdict v;
  const auto s2 = ManifoldSpec::sphere(2);
  const Mat a = diag({1, 2, 3});
  CostParams params;
  params.matrix = a;
  const CostModel c = builtin_cost("rayleigh", params, s2);
  const Point e3 = Eigen::Vector3d(0, 0, 1);
  const double alpha = 0.1;
  const Frame frame = tangent_frame(s2, e3);
  // Riemannian Hessian of x^T A x on the sphere at a unit eigenvector with eigenvalue 3.
  const Mat hess = frame.basis.transpose() * (2.0 * (a - 3.0 * Mat::Identity(3, 3))) * frame.basis;
  const Mat expected = Mat::Identity(2, 2) - alpha * hess;
  for (auto kind : {RetractionKind::Exponential, RetractionKind::Projection}) {
    const auto d = iteration_map_differential(c, s2, MapKind::fixed_step(kind), frame, alpha,
                                              DifferentialMethod::FiniteDifference);
    const double gap = (d.entries - expected).cwiseAbs().maxCoeff();
    v.detail << to_string(kind) << " gap " << gap << "; ";
    v.require(gap <= 1e-5, to_string(kind) + " within 1e-5");
  }
  return v;
}

Verdict rayleigh_avoidance() {
  Verdict v;
  const ExperimentPlan plan = load_plan("rayleigh_sphere.json");
  const AvoidanceReport r = monte_carlo_avoidance(plan).report;
  long to_saddles = 0, to_min = 0;
  for (const RunRecord& run : r.runs) {
    if (!run.outcome.limit_point) continue;
    const Point& p = *run.outcome.limit_point;
    if (std::abs(std::abs(p(0)) - 1.0) <= 1e-6) ++to_min;
    if (std::abs(std::abs(p(1)) - 1.0) <= 1e-6 || std::abs(std::abs(p(2)) - 1.0) <= 1e-6) ++to_saddles;
  }
  const double frac_min = static_cast<double>(to_min) / static_cast<double>(r.num_runs);
  v.detail << "to +-e2/+-e3 " << to_saddles << "/" << r.num_runs << ", to +-e1 " << to_min << "/" << r.num_runs;
  v.require(r.num_runs == 1000, "1000 runs");
  v.require(to_saddles <= 1, "saddle limits <= 1");
  v.require(frac_min >= 0.999, "minimizer fraction >= 0.999");
  return v;
}

Verdict proximal_point() {
  Verdict v;
  const ExperimentPlan plan = load_plan("proximal_saddle.json");
  const CostModel c = cost_of(plan);
  const Mat a = diag({1, -1});
  const double alpha = plan.algorithm.alpha;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Point x = Eigen::Vector2d(normal(rng), normal(rng));
    const Vec closed = (Mat::Identity(2, 2) + alpha * a).partialPivLu().solve(x);
    worst = std::max(worst, (proximal_step(c, plan.manifold, x, alpha).y - closed).cwiseAbs().maxCoeff());
  }
  const auto spectrum = unstable_spectrum(c, plan.manifold, MapKind::proximal(), Vec::Zero(2), alpha);
  const double top = spectrum.back();
  const AvoidanceReport r = monte_carlo_avoidance(plan).report;
  long to_origin = 0;
  for (const RunRecord& run : r.runs) {
    if (run.outcome.limit_point && run.outcome.limit_point->norm() <= 1e-6) ++to_origin;
  }
  v.detail << "inner-solver gap " << worst << ", max |eigenvalue| " << top << ", to origin " << to_origin << "/"
           << r.num_runs << " (strict_saddle " << r.count_strict_saddle << ", escaped " << r.count_escaped << ")";
  v.require(worst <= 1e-8, "resolvent within 1e-8");
  v.require(std::abs(top - 2.0) <= 1e-8, "max magnitude 2");
  v.require(r.num_runs == 1000 && to_origin == 0 && r.count_strict_saddle == 0, "0/1000 to the origin");
  return v;
}

Verdict reproducibility() {
  Verdict v;
  std::vector<std::pair<std::string, ExperimentPlan>> plans;
  for (const char* name : {"interp2d_unit_step.json", "interp2d_armijo.json", "rayleigh_sphere.json",
                           "proximal_saddle.json"}) {
    plans.emplace_back(name, load_plan(name));
  }
  ExperimentPlan perturbed = load_plan("interp2d_perturbed.json");
  perturbed.num_runs = 200;
  plans.emplace_back("interp2d_perturbed.json (200 runs)", perturbed);
  for (const auto& [name, plan] : plans) {
    const std::string one = dump_json(to_json(monte_carlo_avoidance(plan, {.workers = 1}).report));
    const std::string eight = dump_json(to_json(monte_carlo_avoidance(plan, {.workers = 8}).report));
    const std::string again = dump_json(to_json(monte_carlo_avoidance(plan, {.workers = 8}).report));
    const bool same = one == eight && eight == again;
    v.detail << name << (same ? " identical; " : " differs; ");
    v.require(same, name + " byte-identical");
  }
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> all = {
      {"counterexample collapse at alpha 1", counterexample_collapse},
      {"perturbed alpha avoids the saddle", perturbed_alpha},
      {"stabilized Armijo counterexample", armijo_counterexample},
      {"cubic keeps alpha_bar and converges", cubic_footnote},
      {"step-size bound values", step_bounds},
      {"Jacobi/Hessian identity", jacobi_identity},
      {"singular-alpha scan oracle", singular_scan},
      {"critical-point differential", critical_differential},
      {"Rayleigh avoidance on the sphere", rayleigh_avoidance},
      {"proximal point map", proximal_point},
      {"reproducibility across worker counts", reproducibility},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  const auto& all = criteria();
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::fprintf(stderr, "criterion must be in 1..%zu\n", all.size());
    return 2;
  }
  bool ok = true;
  for (size_t k = 0; k < all.size(); ++k) {
    if (only != 0 && static_cast<int>(k + 1) != only) continue;
    Verdict v;
    try {
      v = all[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    std::printf("criterion %zu: %s: %s: %s\n", k + 1, v.pass ? "PASS" : "FAIL", all[k].first.c_str(),
                v.detail.str().c_str());
    std::fflush(stdout);
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}
