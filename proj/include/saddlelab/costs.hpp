#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saddlelab/geometry.hpp"

namespace saddlelab {

enum class CriticalLabel { StrictSaddle, Minimizer, Degenerate };

struct KnownCriticalPoint {
  Point point;
  CriticalLabel label;
};

/// A cost function on a fixed manifold. Evaluators are pure and may be
/// shared across threads.
struct CostModel {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Tangent(const Point&)> gradient;  // Riemannian gradient
  /// Riemannian Hessian action; empty when only finite differences exist.
  std::function<Tangent(const Point&, const Tangent&)> hessian_action;
  std::optional<double> lipschitz;
  std::optional<double> gradient_bound;
  std::vector<KnownCriticalPoint> critical_points;
};

/// Parameter record for builtin_cost. Which fields are read depends on the
/// cost name:
///   quadratic               matrix (A), optional linear (b): f = x^T A x / 2 + b^T x
///   cubic1d                 none: f = x^3 on R
///   interp2d                none: saddle/bowl interpolation on R^2
///   rayleigh                matrix (A): f = x^T A x on the sphere
///   normal_coord_quadratic  matrix (D, dim x dim), optional base_point, optional lipschitz
///   product_sphere_rayleigh blocks (A_i), optional coupling (C): f = sum x_i^T A_i x_i + x^T C x
struct CostParams {
  std::optional<Mat> matrix;
  std::optional<Vec> linear;
  std::optional<Point> base_point;
  std::vector<Mat> blocks;
  std::optional<Mat> coupling;
  std::optional<double> lipschitz;
};

const std::vector<std::string>& builtin_cost_names();

/// Builds a catalog cost on manifold m. ConfigError on unknown names,
/// malformed parameters or an incompatible manifold.
CostModel builtin_cost(const std::string& name, const CostParams& params, const ManifoldSpec& m);

/// The transition function q(t) = u(t) / (u(t) + u(3 - t)), u(t) = exp(-3/t)
/// for t > 0 and 0 otherwise, with its first two derivatives.
struct Transition {
  double value;
  double d1;
  double d2;
};
Transition smooth_transition(double t);

/// Hessian action: the analytic one when present, otherwise a fourth-order
/// central difference of the gradient along retraction curves, projected to
/// the tangent space.
Tangent hessian_apply(const CostModel& cost, const ManifoldSpec& m, const Point& x, const Tangent& u);

/// Symmetrized Hessian matrix in the given frame.
Mat hessian_matrix(const CostModel& cost, const ManifoldSpec& m, const Frame& frame);

enum class CriticalClass { NotCritical, StrictSaddle, MinimizerCandidate, Degenerate };
std::string to_string(CriticalClass c);

struct ClassifyTolerances {
  std::optional<double> tol_g;  // default 1e-8 (1 + |f(x)|)
  double tol_lambda = 1e-6;
};

double default_tol_g(double value);

CriticalClass classify_critical_point(const CostModel& cost, const ManifoldSpec& m, const Point& x,
                                      const ClassifyTolerances& tol = {});

}  // namespace saddlelab
