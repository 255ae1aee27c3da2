#include "saddlelab/optimizers.hpp"

#include <cmath>

#include "saddlelab/errors.hpp"

namespace saddlelab {
namespace {

struct StepResult {
  Point next;
  double alpha;
  int shrinks;
};

void check_start(const ManifoldSpec& m, const Point& x0) {
  if (x0.size() != m.ambient_dim()) {
    throw PreconditionError("initial point has " + std::to_string(x0.size()) + " coordinates, expected " +
                            std::to_string(m.ambient_dim()));
  }
  if (!x0.allFinite() || point_deviation(m, x0) > 1e-10) {
    throw PreconditionError("initial point is not on " + m.describe());
  }
}

// Shared outer loop. The step callback receives (t, x, grad, |grad|).
template <typename StepFn>
Trajectory drive(const CostModel& cost, const ManifoldSpec& m, const Point& x0, const StopRule& stop,
                 double initial_step, StepFn&& step) {
  check_start(m, x0);
  Trajectory traj;
  traj.initial_step = initial_step;
  Point x = x0;
  for (long t = 0;; ++t) {
    traj.points.push_back(x);
    if (!x.allFinite()) {
      if (!m.can_escape()) throw DomainError("non-finite iterate", t);
      traj.grad_norms.push_back(std::numeric_limits<double>::infinity());
      traj.termination = Termination::Escaped;
      break;
    }
    const Tangent g = cost.gradient(x);
    const double gn = norm(m, x, g);
    traj.grad_norms.push_back(gn);
    if (m.can_escape() && x.norm() > stop.escape_radius) {
      traj.termination = Termination::Escaped;
      break;
    }
    if (gn <= stop.grad_tol) {
      traj.termination = Termination::GradTol;
      break;
    }
    if (t >= stop.max_iters) {
      traj.termination = Termination::MaxIters;
      break;
    }
    StepResult s = step(t, x, g, gn);
    traj.steps.push_back(s.alpha);
    traj.shrink_counts.push_back(s.shrinks);
    x = std::move(s.next);
  }
  return traj;
}

Point retract_tagged(const ManifoldSpec& m, RetractionKind kind, const Point& x, const Tangent& v, long t) {
  try {
    return retract(m, kind, x, v);
  } catch (const DomainError& e) {
    throw DomainError(e.what(), t);
  }
}

// Backtracking over alpha_bar * tau^i, i = start, start + 1, ... A trial
// point outside the retraction's domain or with a non-finite value counts as
// a rejection; equality in the sufficient-decrease test accepts.
//
// Near a critical point with f != 0 the predicted decrease r alpha |g|^2 can
// fall below the rounding of f itself. There a trial is accepted when f does
// not rise beyond that rounding and the gradient norm drops.
StepResult backtrack(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind, const LineSearchConfig& cfg,
                     long t, const Point& x, const Tangent& g, double gn, int start) {
  const double f0 = cost.value(x);
  // Squared norm taken directly, not as gn * gn, so that exact ties such as
  // a step landing on a critical point with f = 0 compare equal.
  const double grad_sq = inner(m, x, g, g);
  const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
  for (int i = start, shrinks = 0;; ++i, ++shrinks) {
    const double alpha = cfg.alpha_bar * std::pow(cfg.tau, i);
    if (shrinks > cfg.max_shrinks_per_step) throw LineSearchFailure(t, alpha);
    try {
      Point y = retract(m, kind, x, -alpha * g);
      const double fy = cost.value(y);
      const double predicted = cfg.r * alpha * grad_sq;
      if (f0 - fy >= predicted) return {std::move(y), alpha, i};
      if (predicted <= resolution && fy <= f0 + resolution && norm(m, y, cost.gradient(y)) < gn) {
        return {std::move(y), alpha, i};
      }
    } catch (const DomainError&) {
    }
  }
}

}  // namespace

void LineSearchConfig::validate() const {
  if (!(alpha_bar > 0.0) || !std::isfinite(alpha_bar)) throw ConfigError("line search: alpha_bar must satisfy ᾱ > 0");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("line search: τ must satisfy τ ∈ (0,1)");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("line search: r must satisfy r ∈ (0,1)");
  if (max_shrinks_per_step < 1) throw ConfigError("line search: max_shrinks_per_step must be >= 1");
}

void StopRule::validate() const {
  if (!(grad_tol > 0.0)) throw ConfigError("stop rule: grad_tol must be > 0");
  if (max_iters < 1) throw ConfigError("stop rule: max_iters must be >= 1");
  if (!(escape_radius > 0.0)) throw ConfigError("stop rule: escape_radius must be > 0 or infinite");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::GradTol: return "GradTol";
    case Termination::MaxIters: return "MaxIters";
    case Termination::Escaped: return "Escaped";
  }
  return "unknown";
}

std::string to_string(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::FixedStep: return "fixed_step";
    case AlgorithmKind::StabilizedArmijo: return "stabilized_armijo";
    case AlgorithmKind::StandardArmijo: return "standard_armijo";
    case AlgorithmKind::ProximalPoint: return "proximal_point";
  }
  return "unknown";
}

Trajectory fixed_step_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind, const Point& x0,
                          double alpha, const StopRule& stop) {
  if (!(alpha > 0.0)) throw ConfigError("fixed step: alpha must be > 0");
  if (!m.supports(kind)) throw ConfigError(to_string(kind) + " retraction is not available on " + m.describe());
  stop.validate();
  return drive(cost, m, x0, stop, alpha, [&](long t, const Point& x, const Tangent& g, double) {
    return StepResult{retract_tagged(m, kind, x, -alpha * g, t), alpha, 0};
  });
}

Trajectory stabilized_armijo_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind,
                                 const Point& x0, const LineSearchConfig& cfg, const StopRule& stop) {
  cfg.validate();
  stop.validate();
  if (!m.supports(kind)) throw ConfigError(to_string(kind) + " retraction is not available on " + m.describe());
  int exponent = 0;
  return drive(cost, m, x0, stop, cfg.alpha_bar, [&](long t, const Point& x, const Tangent& g, double gn) {
    StepResult s = backtrack(cost, m, kind, cfg, t, x, g, gn, exponent);
    exponent = s.shrinks;
    return s;
  });
}

Trajectory standard_armijo_run(const CostModel& cost, const ManifoldSpec& m, RetractionKind kind,
                               const Point& x0, const LineSearchConfig& cfg, const StopRule& stop) {
  cfg.validate();
  stop.validate();
  if (!m.supports(kind)) throw ConfigError(to_string(kind) + " retraction is not available on " + m.describe());
  return drive(cost, m, x0, stop, cfg.alpha_bar, [&](long t, const Point& x, const Tangent& g, double gn) {
    return backtrack(cost, m, kind, cfg, t, x, g, gn, 0);
  });
}

ProximalStep proximal_step(const CostModel& cost, const ManifoldSpec& m, const Point& x, double alpha,
                           const ProximalInnerConfig& inner) {
  if (!m.is_hadamard()) throw ConfigError("proximal point requires a Hadamard manifold, got " + m.describe());
  if (!cost.lipschitz) throw ConfigError("proximal point requires a Lipschitz constant for " + cost.name);
  const double lip = *cost.lipschitz;
  if (!(alpha > 0.0 && alpha * lip < 1.0)) throw ConfigError("proximal point requires 0 < α < 1/L");

  // q_x(z) split into its two terms; their magnitudes set the rounding
  // resolution of q.
  struct Model {
    double value;
    double resolution;
  };
  auto objective = [&](const Point& z) {
    const double d = distance(m, x, z);
    const double fz = cost.value(z), dz = d * d / (2.0 * alpha);
    return Model{fz + dz, 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fz) + dz)};
  };
  auto model_gradient = [&](const Point& z) -> Tangent {
    return cost.gradient(z) - log_map(m, z, x) / alpha;
  };

  const double base_step = 1.0 / (lip + 1.0 / alpha);
  ProximalStep out;
  Point z = x;
  Model q = objective(z);
  Tangent grad_q = model_gradient(z);
  double grad_norm = norm(m, z, grad_q);
  out.objective.push_back(q.value);
  while (alpha * grad_norm > inner.tol) {
    if (out.iterations >= inner.max_iters) {
      throw InnerSolverFailure("proximal inner solver hit its iteration cap (residual " +
                               std::to_string(alpha * grad_norm) + ")");
    }
    // On hyperbolic space the Hessian of the distance term grows with the
    // distance, so the fixed step is halved until it makes progress.
    double s = base_step;
    for (;;) {
      const Point trial = retract(m, RetractionKind::Exponential, z, -s * grad_q);
      const Model q_trial = objective(trial);
      const Tangent g_trial = model_gradient(trial);
      const double gn_trial = norm(m, trial, g_trial);
      const double predicted = 0.5 * s * grad_norm * grad_norm;
      // Once the predicted decrease drops below the rounding of q, only the
      // gradient norm can certify progress.
      const bool accept = predicted > q.resolution ? q_trial.value <= q.value - predicted : gn_trial < grad_norm;
      if (accept) {
        z = trial;
        q = q_trial;
        grad_q = g_trial;
        grad_norm = gn_trial;
        break;
      }
      s *= 0.5;
      if (s < 1e-12 * base_step) {
        throw InnerSolverFailure("proximal inner solver stagnated (residual " + std::to_string(alpha * grad_norm) +
                                 ")");
      }
    }
    ++out.iterations;
    out.objective.push_back(q.value);
  }
  out.y = std::move(z);
  out.residual = alpha * grad_norm;
  return out;
}

Trajectory proximal_point_run(const CostModel& cost, const ManifoldSpec& m, const Point& x0, double alpha,
                              const StopRule& stop, const ProximalInnerConfig& inner) {
  stop.validate();
  if (!m.is_hadamard()) throw ConfigError("proximal point requires a Hadamard manifold, got " + m.describe());
  return drive(cost, m, x0, stop, alpha, [&](long, const Point& x, const Tangent&, double) {
    return StepResult{proximal_step(cost, m, x, alpha, inner).y, alpha, 0};
  });
}

void AlgorithmSpec::validate(const ManifoldSpec& m) const {
  switch (kind) {
    case AlgorithmKind::FixedStep:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("fixed step: α must satisfy α > 0");
      break;
    case AlgorithmKind::StabilizedArmijo:
    case AlgorithmKind::StandardArmijo:
      line_search.validate();
      break;
    case AlgorithmKind::ProximalPoint:
      if (!m.is_hadamard()) throw ConfigError("proximal point requires a Hadamard manifold, got " + m.describe());
      if (!(alpha > 0.0)) throw ConfigError("proximal point: α must satisfy α > 0");
      if (!(inner.tol > 0.0)) throw ConfigError("proximal point: inner_tol must be > 0");
      return;
  }
  if (!m.supports(retraction)) {
    throw ConfigError(to_string(retraction) + " retraction is not available on " + m.describe());
  }
}

Trajectory run_algorithm(const AlgorithmSpec& algo, const CostModel& cost, const ManifoldSpec& m, const Point& x0,
                         const StopRule& stop) {
  algo.validate(m);
  switch (algo.kind) {
    case AlgorithmKind::FixedStep: return fixed_step_run(cost, m, algo.retraction, x0, algo.alpha, stop);
    case AlgorithmKind::StabilizedArmijo:
      return stabilized_armijo_run(cost, m, algo.retraction, x0, algo.line_search, stop);
    case AlgorithmKind::StandardArmijo:
      return standard_armijo_run(cost, m, algo.retraction, x0, algo.line_search, stop);
    case AlgorithmKind::ProximalPoint: return proximal_point_run(cost, m, x0, algo.alpha, stop, algo.inner);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace saddlelab
