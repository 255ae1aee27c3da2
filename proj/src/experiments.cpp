#include "saddlelab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "saddlelab/errors.hpp"

namespace saddlelab {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool is_line_search(AlgorithmKind k) {
  return k == AlgorithmKind::StabilizedArmijo || k == AlgorithmKind::StandardArmijo;
}

double max_pairwise_distance(const std::vector<Point>& pts, size_t first) {
  double worst = 0.0;
  for (size_t i = first; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) worst = std::max(worst, (pts[i] - pts[j]).norm());
  }
  return worst;
}

}  // namespace

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Gaussian: return "gaussian";
    case SamplerKind::UniformSphere: return "uniform_sphere";
    case SamplerKind::UniformAnnulus: return "uniform_annulus";
    case SamplerKind::Listed: return "listed";
  }
  return "unknown";
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::ConvergedToStrictSaddle: return "ConvergedToStrictSaddle";
    case Classification::ConvergedToOther: return "ConvergedToOther";
    case Classification::Escaped: return "Escaped";
    case Classification::Undecided: return "Undecided";
  }
  return "unknown";
}

void ExperimentPlan::validate() const {
  if (num_runs < 1) throw ConfigError("num_runs must be >= 1");
  stop.validate();
  algorithm.validate(manifold);
  if (tolerances.window < 2) throw ConfigError("convergence window must be >= 2");
  if (!(tolerances.conv_tol > 0.0)) throw ConfigError("conv_tol must be > 0");
  switch (sampler.kind) {
    case SamplerKind::Gaussian:
      if (!(sampler.sigma > 0.0)) throw ConfigError("gaussian sampler: sigma must be > 0");
      break;
    case SamplerKind::UniformSphere:
      if (manifold.kind() != ManifoldKind::Sphere && manifold.kind() != ManifoldKind::ProductSpheres) {
        throw ConfigError("uniform_sphere sampler needs a sphere manifold");
      }
      break;
    case SamplerKind::UniformAnnulus:
      if (manifold.kind() != ManifoldKind::Euclidean) throw ConfigError("uniform_annulus sampler is Euclidean-only");
      if (!(sampler.r_lo >= 0.0 && sampler.r_lo < sampler.r_hi)) {
        throw ConfigError("uniform_annulus sampler needs 0 <= r_lo < r_hi");
      }
      break;
    case SamplerKind::Listed:
      if (sampler.points.empty()) throw ConfigError("listed sampler needs at least one point");
      for (const auto& p : sampler.points) {
        if (p.size() != manifold.ambient_dim() || !p.allFinite() || point_deviation(manifold, p) > 1e-10) {
          throw ConfigError("listed sampler point is not on " + manifold.describe());
        }
      }
      break;
  }
  const CostModel cost = builtin_cost(this->cost.name, this->cost.params, manifold);
  if (algorithm.kind == AlgorithmKind::ProximalPoint) {
    if (!cost.lipschitz) throw ConfigError("proximal point needs a cost with a Lipschitz constant");
    if (!(algorithm.alpha * *cost.lipschitz < 1.0)) throw ConfigError("proximal point requires 0 < α < 1/L");
  }
}

RunOutcome classify_limit(const Trajectory& traj, const CostModel& cost, const ManifoldSpec& m,
                          const ExperimentTolerances& tol) {
  RunOutcome out;
  out.iterations = static_cast<long>(traj.steps.size());
  if (!traj.steps.empty()) out.final_step = traj.steps.back();
  if (traj.termination == Termination::Escaped) {
    out.classification = Classification::Escaped;
    return out;
  }
  if (traj.termination == Termination::MaxIters) {
    const size_t w = static_cast<size_t>(tol.window);
    if (traj.points.size() < w || max_pairwise_distance(traj.points, traj.points.size() - w) > tol.conv_tol) {
      out.classification = Classification::Undecided;
      return out;
    }
  }
  const Point& limit = traj.points.back();
  out.limit_point = limit;
  out.classification = classify_critical_point(cost, m, limit, tol.classify) == CriticalClass::StrictSaddle
                           ? Classification::ConvergedToStrictSaddle
                           : Classification::ConvergedToOther;
  return out;
}

StabilizationAudit step_stabilization_audit(const Trajectory& traj, long min_tail) {
  if (traj.steps.empty()) return {true, 0, traj.initial_step};
  const double last = traj.steps.back();
  long k = static_cast<long>(traj.steps.size()) - 1;
  while (k > 0 && traj.steps[k - 1] == last) --k;
  const long tail = static_cast<long>(traj.steps.size()) - k;
  const bool stabilized = traj.termination == Termination::GradTol || tail >= min_tail;
  return {stabilized, k, last};
}

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Point sample_initial_point(const SamplerSpec& sampler, const ManifoldSpec& m, long index, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int n) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    return z;
  };
  switch (sampler.kind) {
    case SamplerKind::Gaussian: return project_point(m, sampler.sigma * gaussian(m.ambient_dim()));
    case SamplerKind::UniformSphere: return project_point(m, gaussian(m.ambient_dim()));
    case SamplerKind::UniformAnnulus: {
      const int n = m.ambient_dim();
      Vec dir = gaussian(n);
      while (dir.norm() == 0.0) dir = gaussian(n);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const double lo = std::pow(sampler.r_lo, n), hi = std::pow(sampler.r_hi, n);
      return std::pow(lo + u * (hi - lo), 1.0 / n) * dir / dir.norm();
    }
    case SamplerKind::Listed:
      return sampler.points[static_cast<size_t>(index) % sampler.points.size()];
  }
  throw ConfigError("unknown sampler");
}

WilsonInterval wilson_interval(long successes, long trials) {
  if (trials <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

MonteCarloResult monte_carlo_avoidance(const ExperimentPlan& plan, const MonteCarloOptions& options) {
  plan.validate();
  const CostModel cost = builtin_cost(plan.cost.name, plan.cost.params, plan.manifold);
  const auto n = static_cast<size_t>(plan.num_runs);

  MonteCarloResult result;
  result.report.runs.resize(n);
  if (options.keep_trajectories) result.trajectories.resize(n);

  auto execute = [&](size_t i) {
    RunRecord& rec = result.report.runs[i];
    rec.index = static_cast<long>(i);
    rec.seed = run_seed(plan.seed, i);
    try {
      std::mt19937_64 rng(rec.seed);
      rec.x0 = sample_initial_point(plan.sampler, plan.manifold, rec.index, rng);
      Trajectory traj = run_algorithm(plan.algorithm, cost, plan.manifold, rec.x0, plan.stop);
      rec.termination = traj.termination;
      rec.outcome = classify_limit(traj, cost, plan.manifold, plan.tolerances);
      if (is_line_search(plan.algorithm.kind)) {
        const StabilizationAudit audit = step_stabilization_audit(traj);
        if (audit.stabilized) rec.outcome.stabilization_index = audit.index;
      }
      if (options.keep_trajectories) result.trajectories[i] = std::move(traj);
    } catch (const std::exception& e) {
      rec.outcome = RunOutcome{};
      rec.error = e.what();
    }
  };

  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<size_t>(workers, n));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) execute(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  AvoidanceReport& rep = result.report;
  rep.num_runs = plan.num_runs;
  for (const RunRecord& rec : rep.runs) {
    if (rec.error) ++rep.num_errors;
    switch (rec.outcome.classification) {
      case Classification::ConvergedToStrictSaddle: ++rep.count_strict_saddle; break;
      case Classification::ConvergedToOther: ++rep.count_other; break;
      case Classification::Escaped: ++rep.count_escaped; break;
      case Classification::Undecided: ++rep.count_undecided; break;
    }
  }
  rep.fraction_to_strict_saddle = static_cast<double>(rep.count_strict_saddle) / static_cast<double>(rep.num_runs);
  rep.wilson = wilson_interval(rep.count_strict_saddle, rep.num_runs);
  return result;
}

}  // namespace saddlelab
