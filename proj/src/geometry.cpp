#include "saddlelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "saddlelab/errors.hpp"
#include "stiefel.hpp"

namespace saddlelab {
namespace {

constexpr double kPi = std::numbers::pi;

double minkowski(const Vec& a, const Vec& b) { return a.tail(a.size() - 1).dot(b.tail(b.size() - 1)) - a(0) * b(0); }

Vec minkowski_flip(Vec z) {
  z(0) = -z(0);
  return z;
}

// Angle between unit vectors, exactly symmetric in (x, y).
double sphere_angle(const Vec& x, const Vec& y) { return 2.0 * std::atan2((x - y).norm(), (x + y).norm()); }

double hyperbolic_distance(const Vec& x, const Vec& y) {
  const Vec d = x - y;
  return 2.0 * std::asinh(0.5 * std::sqrt(std::max(0.0, minkowski(d, d))));
}

// Regions of the ambient vector with constant sectional curvature K, the
// metric restricted to each region being Euclidean (or Minkowski for the
// hyperboloid).
struct CurvatureBlock {
  int offset;
  int size;
  double curvature;
};

std::vector<CurvatureBlock> curvature_blocks(const ManifoldSpec& m) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return {{0, m.ambient_dim(), 0.0}};
    case ManifoldKind::Hyperbolic:
      return {{0, m.ambient_dim(), -1.0}};
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      std::vector<CurvatureBlock> out;
      for (const auto& b : m.blocks()) out.push_back({b.offset, b.size, 1.0});
      return out;
    }
    case ManifoldKind::Stiefel:
      break;
  }
  throw ConfigError("Jacobi closed forms need (blockwise) constant curvature; " + m.describe() +
                    " is not supported");
}

double block_inner(const ManifoldSpec& m, const Vec& a, const Vec& b) {
  return m.kind() == ManifoldKind::Hyperbolic ? minkowski(a, b) : a.dot(b);
}

struct JacobiScales {
  double j0;    // J_0(1) on directions orthogonal to the velocity
  double j1;    // J_1(1) likewise
  double hess;  // J_0(1)^{-1} J_1(1)
};

JacobiScales jacobi_scales(double curvature, double r) {
  if (r == 0.0 || curvature == 0.0) return {1.0, 1.0, 1.0};
  const double a = std::sqrt(std::abs(curvature)) * r;
  if (curvature > 0.0) {
    if (a >= kPi) throw DomainError("conjugate point along the geodesic (sqrt(K) r >= pi)");
    return {std::sin(a) / a, std::cos(a), a * std::cos(a) / std::sin(a)};
  }
  return {std::sinh(a) / a, std::cosh(a), a * std::cosh(a) / std::sinh(a)};
}

// Applies w -> (w . u_hat) u_hat + scale * (w - (w . u_hat) u_hat) blockwise,
// with u_hat the unit velocity of each block.
template <typename ScaleFn>
Tangent blockwise_operator(const ManifoldSpec& m, const Tangent& v, const Tangent& w, ScaleFn&& scale) {
  Tangent out = w;
  for (const auto& b : curvature_blocks(m)) {
    const Vec vb = v.segment(b.offset, b.size);
    const Vec wb = w.segment(b.offset, b.size);
    const double r = std::sqrt(std::max(0.0, block_inner(m, vb, vb)));
    const double s = scale(b.curvature, r);
    if (r == 0.0) {
      out.segment(b.offset, b.size) = s * wb;
      continue;
    }
    const Vec u_hat = vb / r;
    const Vec parallel = block_inner(m, wb, u_hat) * u_hat;
    out.segment(b.offset, b.size) = parallel + s * (wb - parallel);
  }
  return out;
}

void require_support(const ManifoldSpec& m, RetractionKind kind) {
  if (!m.supports(kind)) {
    throw ConfigError("retraction " + to_string(kind) + " is not available on " + m.describe());
  }
}

Tangent stiefel_log(const ManifoldSpec& m, const Point& x, const Point& y) {
  const int n = m.stiefel_rows();
  const int p = m.stiefel_cols();
  if ((x - y).norm() == 0.0) return Tangent::Zero(x.size());
  const Mat basis = tangent_frame(m, x).basis;
  auto shoot = [&](const Vec& c) { return stiefel::exp(x, basis * c, n, p); };

  Vec c = basis.transpose() * (y - x);
  double residual = (shoot(c) - y).norm();
  const double h = 1e-6;
  for (int it = 0; it < 100 && residual > 1e-14; ++it) {
    Mat jac(x.size(), c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      Vec cp = c, cm = c;
      cp(k) += h;
      cm(k) -= h;
      jac.col(k) = (shoot(cp) - shoot(cm)) / (2.0 * h);
    }
    Vec step = jac.colPivHouseholderQr().solve(y - shoot(c));
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Vec trial = c + step;
      const double r = (shoot(trial) - y).norm();
      if (r < residual) {
        c = trial;
        residual = r;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  if (residual > 1e-9) throw DomainError("Stiefel logarithm: geodesic shooting did not converge");
  const Tangent v = basis * c;
  if (v.norm() >= m.injectivity_radius()) throw DomainError("Stiefel logarithm: point beyond injectivity radius");
  return v;
}

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Euclidean: return "euclidean";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::ProductSpheres: return "product_spheres";
    case ManifoldKind::Stiefel: return "stiefel";
    case ManifoldKind::Hyperbolic: return "hyperbolic";
  }
  return "unknown";
}

std::string to_string(RetractionKind kind) {
  return kind == RetractionKind::Exponential ? "exponential" : "projection";
}

// ---------------------------------------------------------------------------
// ManifoldSpec

ManifoldSpec ManifoldSpec::euclidean(int n) {
  if (n < 1) throw ConfigError("euclidean: n must be >= 1");
  ManifoldSpec m;
  m.kind_ = ManifoldKind::Euclidean;
  m.dim_ = m.ambient_dim_ = n;
  return m;
}

ManifoldSpec ManifoldSpec::sphere(int d) {
  if (d < 1) throw ConfigError("sphere: d must be >= 1");
  ManifoldSpec m;
  m.kind_ = ManifoldKind::Sphere;
  m.dim_ = d;
  m.ambient_dim_ = d + 1;
  m.k_min_ = m.k_max_ = 1.0;
  m.inj_ = kPi;
  m.blocks_ = {{0, d + 1}};
  return m;
}

ManifoldSpec ManifoldSpec::product_spheres(std::vector<int> dims) {
  if (dims.empty()) throw ConfigError("product_spheres: need at least one factor");
  ManifoldSpec m;
  m.kind_ = ManifoldKind::ProductSpheres;
  int offset = 0;
  for (int d : dims) {
    if (d < 1) throw ConfigError("product_spheres: every factor dimension must be >= 1");
    m.blocks_.push_back({offset, d + 1});
    offset += d + 1;
    m.dim_ += d;
  }
  m.ambient_dim_ = offset;
  m.k_max_ = 1.0;
  m.k_min_ = dims.size() == 1 ? 1.0 : 0.0;  // mixed planes are flat
  m.inj_ = kPi;
  return m;
}

ManifoldSpec ManifoldSpec::stiefel(int n, int p) {
  if (p < 1 || n < p) throw ConfigError("stiefel: need 1 <= p <= n");
  const int dim = n * p - p * (p + 1) / 2;
  if (dim < 1) throw ConfigError("stiefel: manifold is zero-dimensional");
  ManifoldSpec m;
  m.kind_ = ManifoldKind::Stiefel;
  m.dim_ = dim;
  m.ambient_dim_ = n * p;
  m.rows_ = n;
  m.cols_ = p;
  m.k_max_ = 1.0;
  m.k_min_ = p == 1 ? 1.0 : 0.0;
  m.inj_ = kPi;
  return m;
}

ManifoldSpec ManifoldSpec::hyperbolic(int n) {
  if (n < 1) throw ConfigError("hyperbolic: n must be >= 1");
  ManifoldSpec m;
  m.kind_ = ManifoldKind::Hyperbolic;
  m.dim_ = n;
  m.ambient_dim_ = n + 1;
  m.k_min_ = m.k_max_ = -1.0;
  return m;
}

bool ManifoldSpec::is_hadamard() const {
  return kind_ == ManifoldKind::Euclidean || kind_ == ManifoldKind::Hyperbolic;
}

bool ManifoldSpec::has_blockwise_constant_curvature() const { return kind_ != ManifoldKind::Stiefel; }

bool ManifoldSpec::supports(RetractionKind kind) const {
  return kind == RetractionKind::Exponential || kind_ != ManifoldKind::Hyperbolic;
}

bool ManifoldSpec::can_escape() const { return is_hadamard(); }

std::vector<int> ManifoldSpec::sphere_dims() const {
  std::vector<int> out;
  for (const auto& b : blocks_) out.push_back(b.size - 1);
  return out;
}

std::string ManifoldSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case ManifoldKind::Euclidean: os << "Euclidean(" << dim_ << ")"; break;
    case ManifoldKind::Sphere: os << "Sphere(" << dim_ << ")"; break;
    case ManifoldKind::Hyperbolic: os << "Hyperbolic(" << dim_ << ")"; break;
    case ManifoldKind::Stiefel: os << "Stiefel(" << rows_ << "," << cols_ << ")"; break;
    case ManifoldKind::ProductSpheres: {
      os << "ProductSpheres(";
      const auto dims = sphere_dims();
      for (size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
      os << ")";
      break;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Metric plumbing

double inner(const ManifoldSpec& m, const Point&, const Tangent& u, const Tangent& v) {
  return m.kind() == ManifoldKind::Hyperbolic ? minkowski(u, v) : u.dot(v);
}

double norm(const ManifoldSpec& m, const Point& x, const Tangent& u) {
  return std::sqrt(std::max(0.0, inner(m, x, u, u)));
}

Tangent project_tangent(const ManifoldSpec& m, const Point& x, const Vec& z) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return z;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Tangent out = z;
      for (const auto& b : m.blocks()) {
        const auto xb = x.segment(b.offset, b.size);
        out.segment(b.offset, b.size) -= xb.dot(z.segment(b.offset, b.size)) * xb;
      }
      return out;
    }
    case ManifoldKind::Stiefel:
      return stiefel::project_tangent(x, z, m.stiefel_rows(), m.stiefel_cols());
    case ManifoldKind::Hyperbolic:
      return z + minkowski(x, z) * x;
  }
  return z;
}

Tangent egrad_to_rgrad(const ManifoldSpec& m, const Point& x, const Vec& egrad) {
  if (m.kind() == ManifoldKind::Hyperbolic) return project_tangent(m, x, minkowski_flip(egrad));
  return project_tangent(m, x, egrad);
}

Tangent ehess_to_rhess(const ManifoldSpec& m, const Point& x, const Vec& egrad, const Vec& ehess_u,
                       const Tangent& u) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return ehess_u;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Tangent out = project_tangent(m, x, ehess_u);
      for (const auto& b : m.blocks()) {
        out.segment(b.offset, b.size) -=
            x.segment(b.offset, b.size).dot(egrad.segment(b.offset, b.size)) * u.segment(b.offset, b.size);
      }
      return out;
    }
    case ManifoldKind::Stiefel: {
      const int n = m.stiefel_rows(), p = m.stiefel_cols();
      const Mat xm = stiefel::unflatten(x, n, p);
      const Mat gm = stiefel::unflatten(egrad, n, p);
      const Mat um = stiefel::unflatten(u, n, p);
      const Mat xg = xm.transpose() * gm;
      const Mat correction = um * (0.5 * (xg + xg.transpose()));
      return project_tangent(m, x, ehess_u - stiefel::flatten(correction));
    }
    case ManifoldKind::Hyperbolic:
      return project_tangent(m, x, minkowski_flip(ehess_u)) + x.dot(egrad) * u;
  }
  return ehess_u;
}

double point_deviation(const ManifoldSpec& m, const Point& x) {
  if (x.size() != m.ambient_dim()) return std::numeric_limits<double>::infinity();
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return x.allFinite() ? 0.0 : std::numeric_limits<double>::infinity();
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      double dev = 0.0;
      for (const auto& b : m.blocks()) dev = std::max(dev, std::abs(x.segment(b.offset, b.size).norm() - 1.0));
      return dev;
    }
    case ManifoldKind::Stiefel: {
      const Mat xm = stiefel::unflatten(x, m.stiefel_rows(), m.stiefel_cols());
      return (xm.transpose() * xm - Mat::Identity(m.stiefel_cols(), m.stiefel_cols())).cwiseAbs().maxCoeff();
    }
    case ManifoldKind::Hyperbolic:
      if (!(x(0) > 0.0)) return std::numeric_limits<double>::infinity();
      return std::abs(minkowski(x, x) + 1.0);
  }
  return 0.0;
}

double tangent_deviation(const ManifoldSpec& m, const Point& x, const Tangent& v) {
  if (v.size() != m.ambient_dim()) return std::numeric_limits<double>::infinity();
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return 0.0;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      double dev = 0.0;
      for (const auto& b : m.blocks()) {
        dev = std::max(dev, std::abs(x.segment(b.offset, b.size).dot(v.segment(b.offset, b.size))));
      }
      return dev;
    }
    case ManifoldKind::Stiefel: {
      const Mat xm = stiefel::unflatten(x, m.stiefel_rows(), m.stiefel_cols());
      const Mat vm = stiefel::unflatten(v, m.stiefel_rows(), m.stiefel_cols());
      const Mat s = xm.transpose() * vm;
      return (s + s.transpose()).cwiseAbs().maxCoeff();
    }
    case ManifoldKind::Hyperbolic:
      return std::abs(minkowski(x, v));
  }
  return 0.0;
}

Point project_point(const ManifoldSpec& m, const Vec& z) {
  if (z.size() != m.ambient_dim()) throw ConfigError("point has wrong ambient dimension for " + m.describe());
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return z;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Point out = z;
      for (const auto& b : m.blocks()) {
        const double nb = z.segment(b.offset, b.size).norm();
        if (nb == 0.0) throw DomainError("cannot project the zero vector onto a sphere");
        out.segment(b.offset, b.size) /= nb;
      }
      return out;
    }
    case ManifoldKind::Stiefel:
      return stiefel::polar(z, m.stiefel_rows(), m.stiefel_cols());
    case ManifoldKind::Hyperbolic: {
      Point out = z;
      out(0) = std::sqrt(1.0 + z.tail(z.size() - 1).squaredNorm());
      return out;
    }
  }
  return z;
}

// ---------------------------------------------------------------------------
// Maps

Point retract(const ManifoldSpec& m, RetractionKind kind, const Point& x, const Tangent& v) {
  require_support(m, kind);
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return x + v;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Point out = x;
      for (const auto& b : m.blocks()) {
        const Vec xb = x.segment(b.offset, b.size);
        const Vec vb = v.segment(b.offset, b.size);
        const double r = vb.norm();
        if (r == 0.0) continue;
        if (kind == RetractionKind::Exponential) {
          // Renormalized so that rounding does not accumulate over iterations.
          const Vec y = std::cos(r) * xb + (std::sin(r) / r) * vb;
          out.segment(b.offset, b.size) = y / y.norm();
        } else {
          const Vec y = xb + vb;
          const double ny = y.norm();
          if (!(ny > 0.0)) throw DomainError("projection retraction: x + v is zero");
          out.segment(b.offset, b.size) = y / ny;
        }
      }
      return out;
    }
    case ManifoldKind::Stiefel: {
      if (v.isZero(0.0)) return x;
      const int n = m.stiefel_rows(), p = m.stiefel_cols();
      return kind == RetractionKind::Exponential ? stiefel::exp(x, v, n, p) : stiefel::polar(x + v, n, p);
    }
    case ManifoldKind::Hyperbolic: {
      const double r = std::sqrt(std::max(0.0, minkowski(v, v)));
      if (r == 0.0) return x;
      const Point y = std::cosh(r) * x + (std::sinh(r) / r) * v;
      return y / std::sqrt(-minkowski(y, y));
    }
  }
  return x;
}

Tangent log_map(const ManifoldSpec& m, const Point& x, const Point& y) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return y - x;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Tangent out = Tangent::Zero(x.size());
      for (const auto& b : m.blocks()) {
        const Vec xb = x.segment(b.offset, b.size);
        const Vec yb = y.segment(b.offset, b.size);
        if ((xb + yb).norm() < 1e-10) throw DomainError("logarithm at an antipodal pair (cut locus)");
        const Vec u = yb - xb.dot(yb) * xb;
        const double un = u.norm();
        if (un == 0.0) continue;
        out.segment(b.offset, b.size) = (sphere_angle(xb, yb) / un) * u;
      }
      return out;
    }
    case ManifoldKind::Stiefel:
      return stiefel_log(m, x, y);
    case ManifoldKind::Hyperbolic: {
      const Vec u = y + minkowski(x, y) * x;
      const double un = std::sqrt(std::max(0.0, minkowski(u, u)));
      if (un == 0.0) return Tangent::Zero(x.size());
      return (hyperbolic_distance(x, y) / un) * u;
    }
  }
  return y - x;
}

double distance(const ManifoldSpec& m, const Point& x, const Point& y) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return (y - x).norm();
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      double sq = 0.0;
      for (const auto& b : m.blocks()) {
        const double a = sphere_angle(x.segment(b.offset, b.size), y.segment(b.offset, b.size));
        sq += a * a;
      }
      return std::sqrt(sq);
    }
    case ManifoldKind::Stiefel:
      return log_map(m, x, y).norm();
    case ManifoldKind::Hyperbolic:
      return hyperbolic_distance(x, y);
  }
  return 0.0;
}

Tangent parallel_transport(const ManifoldSpec& m, const Point& x, const Tangent& v_dir, double t,
                           const Tangent& u) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return u;
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres: {
      Tangent out = u;
      for (const auto& b : m.blocks()) {
        const Vec vb = v_dir.segment(b.offset, b.size);
        const double r = vb.norm();
        if (r == 0.0) continue;
        const Vec e = vb / r;
        const double a = e.dot(u.segment(b.offset, b.size));
        out.segment(b.offset, b.size) +=
            a * ((std::cos(r * t) - 1.0) * e - std::sin(r * t) * x.segment(b.offset, b.size));
      }
      return out;
    }
    case ManifoldKind::Stiefel:
      return stiefel::transport_geodesic(x, v_dir, t, Mat(u), m.stiefel_rows(), m.stiefel_cols()).col(0);
    case ManifoldKind::Hyperbolic: {
      const double r = std::sqrt(std::max(0.0, minkowski(v_dir, v_dir)));
      if (r == 0.0) return u;
      const Vec e = v_dir / r;
      const double a = minkowski(e, u);
      return u + a * ((std::cosh(r * t) - 1.0) * e + std::sinh(r * t) * x);
    }
  }
  return u;
}

namespace {

// On spheres the projection curve t -> (x + t v)/|x + t v| runs along the
// same great circle as the geodesic, reaching angle atan(|v|).
Tangent projection_equivalent_velocity(const ManifoldSpec& m, const Tangent& v) {
  Tangent out = v;
  for (const auto& b : m.blocks()) {
    const double r = v.segment(b.offset, b.size).norm();
    if (r > 0.0) out.segment(b.offset, b.size) *= std::atan(r) / r;
  }
  return out;
}

}  // namespace

Tangent transport_along_retraction(const ManifoldSpec& m, RetractionKind kind, const Point& x,
                                   const Tangent& v, const Tangent& u) {
  require_support(m, kind);
  if (kind == RetractionKind::Exponential) return parallel_transport(m, x, v, 1.0, u);
  switch (m.kind()) {
    case ManifoldKind::Sphere:
    case ManifoldKind::ProductSpheres:
      return parallel_transport(m, x, projection_equivalent_velocity(m, v), 1.0, u);
    case ManifoldKind::Stiefel:
      return stiefel::transport_projection_curve(x, v, Mat(u), m.stiefel_rows(), m.stiefel_cols()).col(0);
    default:
      return parallel_transport(m, x, v, 1.0, u);
  }
}

Frame tangent_frame(const ManifoldSpec& m, const Point& x) {
  const int n = m.ambient_dim();
  const int dim = m.dim();
  if (m.kind() == ManifoldKind::Euclidean) return {x, Mat::Identity(n, n)};

  Mat basis(n, dim);
  int found = 0;
  for (int k = 0; k < n && found < dim; ++k) {
    Tangent e = project_tangent(m, x, Vec::Unit(n, k));
    // Two Gram-Schmidt passes keep the basis orthonormal to rounding.
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < found; ++j) e -= inner(m, x, basis.col(j), e) * basis.col(j);
    }
    const double len = norm(m, x, e);
    if (len < 1e-8) continue;
    basis.col(found++) = e / len;
  }
  if (found != dim) throw DomainError("tangent_frame: could not complete a basis at this point");
  return {x, basis};
}

Frame transport_frame(const ManifoldSpec& m, RetractionKind kind, const Frame& frame, const Tangent& v) {
  Frame out{retract(m, kind, frame.base, v), Mat(frame.basis.rows(), frame.basis.cols())};
  if (m.kind() == ManifoldKind::Stiefel) {
    const int n = m.stiefel_rows(), p = m.stiefel_cols();
    out.basis = kind == RetractionKind::Exponential
                    ? stiefel::transport_geodesic(frame.base, v, 1.0, frame.basis, n, p)
                    : stiefel::transport_projection_curve(frame.base, v, frame.basis, n, p);
    return out;
  }
  for (Eigen::Index j = 0; j < frame.basis.cols(); ++j) {
    out.basis.col(j) = transport_along_retraction(m, kind, frame.base, v, frame.basis.col(j));
  }
  return out;
}

Vec frame_coordinates(const ManifoldSpec& m, const Frame& frame, const Tangent& u) {
  if (m.kind() == ManifoldKind::Hyperbolic) return frame.basis.transpose() * minkowski_flip(u);
  return frame.basis.transpose() * u;
}

Tangent from_frame_coordinates(const Frame& frame, const Vec& coords) { return frame.basis * coords; }

// ---------------------------------------------------------------------------
// Jacobi fields

JacobiEndpoints jacobi_endpoints(const ManifoldSpec& m, const Point& x, const Tangent& v) {
  return jacobi_endpoints(m, tangent_frame(m, x), v);
}

JacobiEndpoints jacobi_endpoints(const ManifoldSpec& m, const Frame& source, const Tangent& v) {
  const auto j0_scale = [](double k, double r) { return jacobi_scales(k, r).j0; };
  const auto j1_scale = [](double k, double r) { return jacobi_scales(k, r).j1; };
  JacobiEndpoints out;
  out.j0 = operator_matrix(m, source, [&](const Tangent& w) { return blockwise_operator(m, v, w, j0_scale); });
  out.j1 = operator_matrix(m, source, [&](const Tangent& w) { return blockwise_operator(m, v, w, j1_scale); });
  out.source = source;
  out.target = transport_frame(m, RetractionKind::Exponential, source, v);
  return out;
}

Mat hess_half_sq_dist(const ManifoldSpec& m, const Point& x, const Point& y) {
  return hess_half_sq_dist(m, tangent_frame(m, x), y);
}

Mat hess_half_sq_dist(const ManifoldSpec& m, const Frame& frame, const Point& y) {
  curvature_blocks(m);  // rejects Stiefel before the expensive logarithm
  const Tangent v = log_map(m, frame.base, y);
  const auto scale = [](double k, double r) { return jacobi_scales(k, r).hess; };
  return operator_matrix(m, frame, [&](const Tangent& w) { return blockwise_operator(m, v, w, scale); });
}

}  // namespace saddlelab
