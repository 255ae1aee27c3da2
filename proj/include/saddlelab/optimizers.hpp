#pragma once

#include <limits>
#include <string>
#include <vector>

#include "saddlelab/costs.hpp"
#include "saddlelab/geometry.hpp"

namespace saddlelab {

struct LineSearchConfig {
  double alpha_bar = 1.0;
  double tau = 0.5;
  double r = 0.5;
  int max_shrinks_per_step = 200;

  /// ConfigError naming the violated condition.
  void validate() const;
};

struct StopRule {
  double grad_tol = 1e-9;
  long max_iters = 10000;
  double escape_radius = 1e6;  // ambient norm; may be +inf

  void validate() const;
};

enum class Termination { GradTol, MaxIters, Escaped };
std::string to_string(Termination t);

/// points has one more entry than steps; grad_norms is aligned with points.
/// shrink_counts[t] is the exponent i with steps[t] = alpha_bar * tau^i for
/// line-search runs and 0 otherwise.
struct Trajectory {
  std::vector<Point> points;
  std::vector<double> steps;
  std::vector<double> grad_norms;
  std::vector<int> shrink_counts;
  Termination termination = Termination::MaxIters;
  double initial_step = 0.0;  // alpha_bar for line searches, alpha otherwise
};

/// x_{t+1} = R_{x_t}(-alpha grad f(x_t)). A DomainError from the retraction
/// is rethrown tagged with the iterate index.
Trajectory fixed_step_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind, const Point& x0,
                          double alpha, const StopRule& stop);

/// Backtracking that starts each search from the previously accepted step.
Trajectory stabilized_armijo_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind,
                                 const Point& x0, const LineSearchConfig& cfg, const StopRule& stop);

/// Classic backtracking restarting from alpha_bar at every iteration.
Trajectory standard_armijo_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind,
                               const Point& x0, const LineSearchConfig& cfg, const StopRule& stop);

struct ProximalInnerConfig {
  double tol = 1e-10;  // bound on ||alpha grad f(y) - Log_y(x)||
  long max_iters = 100000;
};

struct ProximalStep {
  Point y;
  std::vector<double> objective;  // q_x at every inner iterate, starting at x
  long iterations = 0;
  double residual = 0.0;  // ||alpha grad f(y) - Log_y(x)||
};

/// argmin_z f(z) + dist(x, z)^2 / (2 alpha) by Riemannian gradient descent
/// started at x with step 1/(L + 1/alpha), halved when it fails to decrease.
ProximalStep proximal_step(const CostModel& cost, const ManifoldSpec& m, const Point& x, double alpha,
                           const ProximalInnerConfig& inner = {});

/// Proximal point iteration on a Hadamard manifold with 0 < alpha < 1/L.
Trajectory proximal_point_run(const CostModel& cost, const ManifoldSpec& m, const Point& x0, double alpha,
                              const StopRule& stop, const ProximalInnerConfig& inner = {});

enum class AlgorithmKind { FixedStep, StabilizedArmijo, StandardArmijo, ProximalPoint };
std::string to_string(AlgorithmKind k);

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::FixedStep;
  RetractionKind retraction = RetractionKind::Exponential;
  double alpha = 1.0;  // fixed step / proximal parameter
  LineSearchConfig line_search;
  ProximalInnerConfig inner;

  void validate(const ManifoldSpec& m) const;
};

Trajectory run_algorithm(const AlgorithmSpec& algo, const CostModel& cost, const ManifoldSpec& m, const Point& x0,
                         const StopRule& stop);

}  // namespace saddlelab
