#pragma once

#include <limits>
#include <string>
#include <vector>

#include "saddlelab/types.hpp"

namespace saddlelab {

enum class ManifoldKind { Euclidean, Sphere, ProductSpheres, Stiefel, Hyperbolic };
enum class RetractionKind { Exponential, Projection };

std::string to_string(ManifoldKind kind);
std::string to_string(RetractionKind kind);

/// A contiguous slice of ambient coordinates belonging to one sphere factor.
struct SphereBlock {
  int offset;
  int size;  // ambient size d + 1

  bool operator==(const SphereBlock&) const = default;
};

/// The geometric model: which manifold, its dimensions and curvature data.
///
/// Sphere and ProductSpheres carry the submanifold metric of R^{d+1}; Stiefel
/// carries the embedded (trace) metric; Hyperbolic is the hyperboloid model
/// {x : <x,x>_L = -1, x_0 > 0} with the Minkowski form restricted to tangents.
class ManifoldSpec {
 public:
  static ManifoldSpec euclidean(int n);
  static ManifoldSpec sphere(int d);
  static ManifoldSpec product_spheres(std::vector<int> dims);
  static ManifoldSpec stiefel(int n, int p);
  static ManifoldSpec hyperbolic(int n);

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int ambient_dim() const { return ambient_dim_; }
  double k_min() const { return k_min_; }
  double k_max() const { return k_max_; }
  double injectivity_radius() const { return inj_; }
  bool is_hadamard() const;
  /// Euclidean, Sphere, Hyperbolic; ProductSpheres is handled blockwise
  /// where Jacobi closed forms are concerned.
  bool has_blockwise_constant_curvature() const;
  bool supports(RetractionKind kind) const;
  /// Ambient norm can grow without bound (non-compact manifolds).
  bool can_escape() const;

  /// Sphere factors for Sphere / ProductSpheres; empty otherwise.
  const std::vector<SphereBlock>& blocks() const { return blocks_; }
  /// Intrinsic sphere dimensions d_i (ProductSpheres / Sphere).
  std::vector<int> sphere_dims() const;
  int stiefel_rows() const { return rows_; }
  int stiefel_cols() const { return cols_; }

  std::string describe() const;

  bool operator==(const ManifoldSpec& other) const = default;

 private:
  ManifoldSpec() = default;

  ManifoldKind kind_ = ManifoldKind::Euclidean;
  int dim_ = 0;
  int ambient_dim_ = 0;
  double k_min_ = 0.0;
  double k_max_ = 0.0;
  double inj_ = std::numeric_limits<double>::infinity();
  std::vector<SphereBlock> blocks_;
  int rows_ = 0;
  int cols_ = 0;
};

/// Orthonormal basis of T_x M, stored as ambient column vectors.
struct Frame {
  Point base;
  Mat basis;  // ambient_dim x dim
};

// ---------------------------------------------------------------------------
// Metric and tangent-space plumbing

double inner(const ManifoldSpec& m, const Point& x, const Tangent& u, const Tangent& v);
double norm(const ManifoldSpec& m, const Point& x, const Tangent& u);

/// Orthogonal projection of an ambient vector onto T_x M.
Tangent project_tangent(const ManifoldSpec& m, const Point& x, const Vec& z);

/// Riemannian gradient from the Euclidean (ambient) gradient.
Tangent egrad_to_rgrad(const ManifoldSpec& m, const Point& x, const Vec& egrad);

/// Riemannian Hessian action from the Euclidean gradient and the Euclidean
/// Hessian applied to u.
Tangent ehess_to_rhess(const ManifoldSpec& m, const Point& x, const Vec& egrad,
                       const Vec& ehess_u, const Tangent& u);

/// Largest violation of the point constraints (0 for Euclidean).
double point_deviation(const ManifoldSpec& m, const Point& x);
/// Largest violation of the tangency constraints at x.
double tangent_deviation(const ManifoldSpec& m, const Point& x, const Tangent& v);

/// Maps an arbitrary ambient vector to a nearby manifold point (normalize,
/// polar factor, hyperboloid lift of the spatial part).
Point project_point(const ManifoldSpec& m, const Vec& z);

// ---------------------------------------------------------------------------
// Maps

/// Exponential map or metric-projection retraction. Throws ConfigError for
/// unsupported pairs and DomainError for rank-deficient projections.
Point retract(const ManifoldSpec& m, RetractionKind kind, const Point& x, const Tangent& v);

/// Riemannian logarithm; DomainError on the cut locus.
Tangent log_map(const ManifoldSpec& m, const Point& x, const Point& y);

double distance(const ManifoldSpec& m, const Point& x, const Point& y);

/// Parallel transport of u along s -> Exp_x(s * v_dir), evaluated at s = t.
Tangent parallel_transport(const ManifoldSpec& m, const Point& x, const Tangent& v_dir, double t,
                           const Tangent& u);

/// Parallel transport of u along the retraction curve t -> R_x(t v), t in [0, 1].
Tangent transport_along_retraction(const ManifoldSpec& m, RetractionKind kind, const Point& x,
                                   const Tangent& v, const Tangent& u);

/// Deterministic frame: Gram-Schmidt over projected ambient basis vectors.
Frame tangent_frame(const ManifoldSpec& m, const Point& x);

/// Transports every frame vector along t -> R_x(t v).
Frame transport_frame(const ManifoldSpec& m, RetractionKind kind, const Frame& frame,
                      const Tangent& v);

Vec frame_coordinates(const ManifoldSpec& m, const Frame& frame, const Tangent& u);
Tangent from_frame_coordinates(const Frame& frame, const Vec& coords);

/// Matrix of a tangent-space operator in frame coordinates.
template <typename Op>
Mat operator_matrix(const ManifoldSpec& m, const Frame& frame, Op&& op) {
  const auto n = frame.basis.cols();
  Mat out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Tangent image = op(Tangent(frame.basis.col(j)));
    out.col(j) = frame_coordinates(m, frame, image);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jacobi fields and the half-squared distance (blockwise constant curvature)

struct JacobiEndpoints {
  Mat j0;  // J_0(1): J(0) = 0, D_t J(0) = I
  Mat j1;  // J_1(1): J(0) = I, D_t J(0) = 0
  Frame source;
  Frame target;  // source transported along t -> Exp_x(t v)
};

/// Closed-form Jacobi matrices along t -> Exp_x(t v), in the given source
/// frame and its parallel transport. DomainError at conjugate points.
JacobiEndpoints jacobi_endpoints(const ManifoldSpec& m, const Point& x, const Tangent& v);
JacobiEndpoints jacobi_endpoints(const ManifoldSpec& m, const Frame& source, const Tangent& v);

/// Hessian of z -> dist(z, y)^2 / 2 at x, in the given frame at x.
Mat hess_half_sq_dist(const ManifoldSpec& m, const Point& x, const Point& y);
Mat hess_half_sq_dist(const ManifoldSpec& m, const Frame& frame, const Point& y);

}  // namespace saddlelab
