#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saddlelab/costs.hpp"
#include "saddlelab/geometry.hpp"
#include "saddlelab/optimizers.hpp"

namespace saddlelab {

/// The iteration map whose differential is studied.
struct MapKind {
  enum class Type { FixedStepRetraction, ProximalPoint };
  Type type = Type::FixedStepRetraction;
  RetractionKind retraction = RetractionKind::Exponential;

  static MapKind fixed_step(RetractionKind kind) { return {Type::FixedStepRetraction, kind}; }
  static MapKind proximal() { return {Type::ProximalPoint, RetractionKind::Exponential}; }
};
std::string to_string(const MapKind& map);

enum class DifferentialMethod { FiniteDifference, ClosedFormEuclidean, ClosedFormJacobi, ClosedFormCritical };
std::string to_string(DifferentialMethod m);

/// Dg(x) as a matrix from source_frame coordinates (at x) to target_frame
/// coordinates (at g(x)); the target frame is the source frame transported
/// along the curve from x to g(x).
struct DifferentialMatrix {
  Frame source_frame;
  Frame target_frame;
  Mat entries;
  DifferentialMethod method;
};

/// Uses tangent_frame(m, x) as the source frame.
DifferentialMatrix iteration_map_differential(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                              const Point& x, double alpha, DifferentialMethod method);
DifferentialMatrix iteration_map_differential(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                              const Frame& source, double alpha, DifferentialMethod method);

struct SingularSet {
  Point x;
  std::vector<double> alphas;  // strictly increasing, in (0, alpha_max]
  double alpha_max = 0.0;
  std::string method;
};

/// Step sizes in (0, alpha_max] at which Dg_alpha(x) is singular. Exact
/// eigenvalue reciprocals on Euclidean costs with an analytic Hessian;
/// otherwise sign changes of det Dg on a uniform grid refined by bisection
/// and kept when the smallest singular value is below 1e-6 times the largest.
SingularSet singular_alpha_scan(const CostModel& cost, const ManifoldSpec& m, const MapKind& map, const Point& x,
                                double alpha_max, int grid_size = 2048);

enum class BoundRegime { Hadamard, PositiveCurvature, Pinched, Stiefel, ProductSpheres };
std::string to_string(BoundRegime r);
/// Accepts "hadamard", "positive-curvature", "pinched", "stiefel", "product-spheres".
BoundRegime parse_bound_regime(const std::string& name);

struct BoundInputs {
  std::optional<double> lipschitz;       // L
  std::optional<double> gradient_bound;  // G
  std::optional<double> injectivity;     // J
  std::optional<double> k_min;
  std::optional<double> k_max;
  std::optional<int> stiefel_cols;  // p
};

struct StepSizeBound {
  BoundRegime regime;
  double alpha_max;
  BoundInputs inputs;
};

/// arccot on (0, inf), valued in (0, pi/2). ConfigError for t <= 0.
double arccot(double t);

/// Largest admissible step of each saddle-avoidance regime. ConfigError on
/// missing or nonpositive inputs.
StepSizeBound step_size_bound(BoundRegime regime, const BoundInputs& inputs);

/// Sorted eigenvalue magnitudes of Dg(x*) at a critical point:
/// |1 - alpha lambda_i| for fixed-step maps, 1 / |1 + alpha lambda_i| for
/// the proximal map. PreconditionError if x* is not critical.
std::vector<double> unstable_spectrum(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                      const Point& x_star, double alpha, const ClassifyTolerances& tol = {});

/// Max entrywise gap between J0(1)^{-1} J1(1) and a finite-difference Hessian
/// of z -> dist(z, Exp_x(v))^2 / 2 at x, both in tangent_frame(m, x).
double hess_dist_consistency(const ManifoldSpec& m, const Point& x, const Tangent& v);

}  // namespace saddlelab
