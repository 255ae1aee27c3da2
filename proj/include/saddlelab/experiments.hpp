#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saddlelab/costs.hpp"
#include "saddlelab/geometry.hpp"
#include "saddlelab/optimizers.hpp"

namespace saddlelab {

enum class SamplerKind { Gaussian, UniformSphere, UniformAnnulus, Listed };
std::string to_string(SamplerKind k);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Gaussian;
  double sigma = 1.0;  // Gaussian
  double r_lo = 0.0;   // UniformAnnulus
  double r_hi = 1.0;
  std::vector<Point> points;  // Listed, cycled
};

struct CostSpec {
  std::string name;
  CostParams params;
};

struct ExperimentTolerances {
  int window = 20;  // convergence window W
  double conv_tol = 1e-7;
  ClassifyTolerances classify;
};

struct ExperimentPlan {
  ManifoldSpec manifold = ManifoldSpec::euclidean(1);
  CostSpec cost;
  AlgorithmSpec algorithm;
  SamplerSpec sampler;
  long num_runs = 1;
  std::uint64_t seed = 0;
  StopRule stop;
  ExperimentTolerances tolerances;

  /// ConfigError on any inconsistency, including cost construction.
  void validate() const;
};

enum class Classification { ConvergedToStrictSaddle, ConvergedToOther, Escaped, Undecided };
std::string to_string(Classification c);

struct RunOutcome {
  Classification classification = Classification::Undecided;
  std::optional<Point> limit_point;
  long iterations = 0;
  std::optional<double> final_step;
  std::optional<long> stabilization_index;
};

/// Limit taxonomy: Escaped on escape; Undecided after MaxIters unless the last
/// W iterates lie within conv_tol of each other; otherwise the final iterate
/// is labelled through classify_critical_point.
RunOutcome classify_limit(const Trajectory& traj, const CostModel& cost, const ManifoldSpec& m,
                          const ExperimentTolerances& tol = {});

struct StabilizationAudit {
  bool stabilized = false;
  std::optional<long> index;  // first K with steps[K:] constant
  double final_alpha = 0.0;
};

/// A run counts as stabilized when it stopped on the gradient tolerance or
/// its constant tail spans at least `min_tail` steps.
StabilizationAudit step_stabilization_audit(const Trajectory& traj, long min_tail = 20);

/// Counter-based per-run seed: depends only on (seed, index).
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index);

/// Draws one initial point for the plan's sampler.
Point sample_initial_point(const SamplerSpec& sampler, const ManifoldSpec& m, long index, std::mt19937_64& rng);

struct RunRecord {
  long index = 0;
  std::uint64_t seed = 0;
  Point x0;
  RunOutcome outcome;
  std::optional<Termination> termination;
  std::optional<std::string> error;
};

struct WilsonInterval {
  double lo;
  double hi;
};
WilsonInterval wilson_interval(long successes, long trials);

struct AvoidanceReport {
  long num_runs = 0;
  long count_strict_saddle = 0;
  long count_other = 0;
  long count_escaped = 0;
  long count_undecided = 0;
  long num_errors = 0;
  double fraction_to_strict_saddle = 0.0;
  WilsonInterval wilson{0.0, 1.0};
  std::vector<RunRecord> runs;
};

struct MonteCarloOptions {
  unsigned workers = 0;  // 0: hardware concurrency
  bool keep_trajectories = false;
};

struct MonteCarloResult {
  AvoidanceReport report;
  std::vector<Trajectory> trajectories;  // by run index, when kept
};

/// Runs the plan's batch concurrently. Per-run failures are recorded as
/// Undecided with an error message; they never abort the batch.
MonteCarloResult monte_carlo_avoidance(const ExperimentPlan& plan, const MonteCarloOptions& options = {});

}  // namespace saddlelab
