#include "saddlelab/costs.hpp"

#include <algorithm>
#include <cmath>

#include "saddlelab/errors.hpp"

namespace saddlelab {
namespace {

void require_manifold(const std::string& name, const ManifoldSpec& m, bool ok, const std::string& expected) {
  if (!ok) throw ConfigError(name + " is defined on " + expected + ", not on " + m.describe());
}

Mat require_symmetric(const std::string& name, const std::optional<Mat>& a, Eigen::Index size) {
  if (!a) throw ConfigError(name + ": missing parameter 'matrix'");
  if (a->rows() != size || a->cols() != size) {
    throw ConfigError(name + ": matrix must be " + std::to_string(size) + "x" + std::to_string(size));
  }
  if (!a->allFinite()) throw ConfigError(name + ": matrix has non-finite entries");
  const double scale = std::max(1.0, a->cwiseAbs().maxCoeff());
  if ((*a - a->transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError(name + ": matrix must be symmetric");
  }
  return 0.5 * (*a + a->transpose());
}

CriticalLabel label_from_spectrum(const Vec& eig, double tol = 1e-12) {
  if (eig.minCoeff() < -tol) return CriticalLabel::StrictSaddle;
  if (eig.minCoeff() > tol) return CriticalLabel::Minimizer;
  return CriticalLabel::Degenerate;
}

// ---------------------------------------------------------------------------

CostModel make_quadratic(const CostParams& params, const ManifoldSpec& m) {
  require_manifold("quadratic", m, m.kind() == ManifoldKind::Euclidean, "Euclidean space");
  const int n = m.dim();
  const Mat a = require_symmetric("quadratic", params.matrix, n);
  const Vec b = params.linear.value_or(Vec::Zero(n));
  if (b.size() != n) throw ConfigError("quadratic: linear term must have length " + std::to_string(n));

  const Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  CostModel c;
  c.name = "quadratic";
  c.value = [a, b](const Point& x) { return 0.5 * x.dot(a * x) + b.dot(x); };
  c.gradient = [a, b](const Point& x) -> Tangent { return a * x + b; };
  c.hessian_action = [a](const Point&, const Tangent& u) -> Tangent { return a * u; };
  c.lipschitz = eig.eigenvalues().cwiseAbs().maxCoeff();
  const Vec& lam = eig.eigenvalues();
  const bool invertible = lam.cwiseAbs().minCoeff() > 1e-12 * std::max(1.0, *c.lipschitz);
  if (invertible) {
    c.critical_points.push_back({Point(-a.ldlt().solve(b)), label_from_spectrum(lam)});
  } else if (b.isZero(0.0)) {
    c.critical_points.push_back({Point::Zero(n), label_from_spectrum(lam)});
  }
  return c;
}

CostModel make_cubic1d(const ManifoldSpec& m) {
  require_manifold("cubic1d", m, m.kind() == ManifoldKind::Euclidean && m.dim() == 1, "Euclidean(1)");
  CostModel c;
  c.name = "cubic1d";
  c.value = [](const Point& x) { return x(0) * x(0) * x(0); };
  c.gradient = [](const Point& x) -> Tangent { return Vec::Constant(1, 3.0 * x(0) * x(0)); };
  c.hessian_action = [](const Point& x, const Tangent& u) -> Tangent { return 6.0 * x(0) * u; };
  c.critical_points.push_back({Point::Zero(1), CriticalLabel::Degenerate});
  return c;
}

// f(x) = |x|^2 / 2 - q(4 - |x|^2) x_2^2, i.e. q f_1 + (1 - q) f_2 with
// f_1 = (x_1^2 - x_2^2)/2 and f_2 = (x_1^2 + x_2^2)/2.
double interp2d_value(const Vec& x) {
  const double s = x.squaredNorm();
  return 0.5 * s - smooth_transition(4.0 - s).value * x(1) * x(1);
}

Vec interp2d_gradient(const Vec& x) {
  const Transition w = smooth_transition(4.0 - x.squaredNorm());
  const double x2 = x(1);
  Vec g = (1.0 + 2.0 * w.d1 * x2 * x2) * x;
  g(1) -= 2.0 * w.value * x2;
  return g;
}

Eigen::Matrix2d interp2d_hessian(const Vec& x) {
  const Transition w = smooth_transition(4.0 - x.squaredNorm());
  const double x2 = x(1);
  const Eigen::Vector2d p(x(0), x(1));
  const Eigen::Vector2d e2(0.0, 1.0);
  Eigen::Matrix2d h = (1.0 + 2.0 * w.d1 * x2 * x2) * Eigen::Matrix2d::Identity();
  h -= 4.0 * w.d2 * x2 * x2 * p * p.transpose();
  h += 4.0 * w.d1 * x2 * (p * e2.transpose() + e2 * p.transpose());
  h -= 2.0 * w.value * e2 * e2.transpose();
  return h;
}

double interp2d_hessian_norm(double r, double theta) {
  const Vec x = Eigen::Vector2d(r * std::cos(theta), r * std::sin(theta));
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(interp2d_hessian(x)).eigenvalues().cwiseAbs().maxCoeff();
}

// Sup of the Hessian operator norm, estimated by a polar grid search over the
// transition annulus (the Hessian is diag(1,-1) inside and I outside) with
// successive zooming around the best cell. Reflection symmetry restricts the
// search to the first quadrant.
double estimate_interp2d_lipschitz() {
  constexpr double kHalfPi = 1.5707963267948966;
  double r_lo = 1.0, r_hi = 2.0, th_lo = 0.0, th_hi = kHalfPi;
  double best = 1.0, best_r = 1.5, best_th = 0.0;
  for (int round = 0; round < 6; ++round) {
    const int nr = 400, nt = 200;
    for (int i = 0; i <= nr; ++i) {
      const double r = r_lo + (r_hi - r_lo) * i / nr;
      for (int j = 0; j <= nt; ++j) {
        const double th = th_lo + (th_hi - th_lo) * j / nt;
        const double v = interp2d_hessian_norm(r, th);
        if (v > best) {
          best = v;
          best_r = r;
          best_th = th;
        }
      }
    }
    const double dr = 4.0 * (r_hi - r_lo) / nr;
    const double dt = 4.0 * (th_hi - th_lo) / nt;
    r_lo = std::max(1.0, best_r - dr);
    r_hi = std::min(2.0, best_r + dr);
    th_lo = std::max(0.0, best_th - dt);
    th_hi = std::min(kHalfPi, best_th + dt);
  }
  return best * (1.0 + 1e-6);
}

CostModel make_interp2d(const ManifoldSpec& m) {
  require_manifold("interp2d", m, m.kind() == ManifoldKind::Euclidean && m.dim() == 2, "Euclidean(2)");
  static const double lipschitz = estimate_interp2d_lipschitz();
  CostModel c;
  c.name = "interp2d";
  c.value = [](const Point& x) { return interp2d_value(x); };
  c.gradient = [](const Point& x) -> Tangent { return interp2d_gradient(x); };
  c.hessian_action = [](const Point& x, const Tangent& u) -> Tangent { return interp2d_hessian(x) * u; };
  c.lipschitz = lipschitz;
  c.critical_points.push_back({Point::Zero(2), CriticalLabel::StrictSaddle});
  return c;
}

CostModel make_rayleigh(const CostParams& params, const ManifoldSpec& m) {
  require_manifold("rayleigh", m, m.kind() == ManifoldKind::Sphere, "a sphere");
  const Mat a = require_symmetric("rayleigh", params.matrix, m.ambient_dim());
  const Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  const Vec& lam = eig.eigenvalues();
  const double spread = lam.maxCoeff() - lam.minCoeff();

  CostModel c;
  c.name = "rayleigh";
  c.value = [a](const Point& x) { return x.dot(a * x); };
  c.gradient = [a, m](const Point& x) { return egrad_to_rgrad(m, x, 2.0 * a * x); };
  c.hessian_action = [a, m](const Point& x, const Tangent& u) {
    return ehess_to_rhess(m, x, 2.0 * a * x, 2.0 * a * u, u);
  };
  c.lipschitz = 2.0 * spread;
  c.gradient_bound = spread;
  const double tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    CriticalLabel label = CriticalLabel::Degenerate;
    if (lam(i) > lam(0) + tol) {
      label = CriticalLabel::StrictSaddle;
    } else if (lam.size() == 1 || lam(1) > lam(0) + tol) {
      label = CriticalLabel::Minimizer;
    }
    const Point v = eig.eigenvectors().col(i);
    c.critical_points.push_back({v, label});
    c.critical_points.push_back({Point(-v), label});
  }
  return c;
}

Point canonical_base_point(const ManifoldSpec& m) {
  if (m.kind() == ManifoldKind::Euclidean) return Point::Zero(m.ambient_dim());
  return Point::Unit(m.ambient_dim(), 0);
}

// f(x) = <Log_p(x), D Log_p(x)> / 2 with D given in tangent_frame(p).
// grad f(x) is the adjoint of D Log_p(x) applied to D Log_p(x): transport to x
// after scaling the components orthogonal to Log_p(x) by r / sin(r) (sphere)
// or r / sinh(r) (hyperbolic).
CostModel make_normal_coord_quadratic(const CostParams& params, const ManifoldSpec& m) {
  const bool ok = m.kind() == ManifoldKind::Euclidean || m.kind() == ManifoldKind::Sphere ||
                  m.kind() == ManifoldKind::Hyperbolic;
  require_manifold("normal_coord_quadratic", m, ok, "Euclidean, Sphere or Hyperbolic space");
  const Mat d = require_symmetric("normal_coord_quadratic", params.matrix, m.dim());
  const Point p = params.base_point.value_or(canonical_base_point(m));
  if (p.size() != m.ambient_dim() || point_deviation(m, p) > 1e-10) {
    throw ConfigError("normal_coord_quadratic: base_point is not on " + m.describe());
  }
  if (params.lipschitz && !(*params.lipschitz > 0.0)) {
    throw ConfigError("normal_coord_quadratic: lipschitz must be positive");
  }
  const Frame frame = tangent_frame(m, p);

  CostModel c;
  c.name = "normal_coord_quadratic";
  c.value = [m, frame, d](const Point& x) {
    const Vec coords = frame_coordinates(m, frame, log_map(m, frame.base, x));
    return 0.5 * coords.dot(d * coords);
  };
  c.gradient = [m, frame, d](const Point& x) -> Tangent {
    const Tangent w = log_map(m, frame.base, x);
    const Tangent z = from_frame_coordinates(frame, d * frame_coordinates(m, frame, w));
    const double r = norm(m, frame.base, w);
    if (r == 0.0) return z;
    double scale = 1.0;
    if (m.kind() == ManifoldKind::Sphere) scale = r / std::sin(r);
    if (m.kind() == ManifoldKind::Hyperbolic) scale = r / std::sinh(r);
    const Tangent u_hat = w / r;
    const Tangent parallel = inner(m, frame.base, z, u_hat) * u_hat;
    const Tangent scaled = parallel + scale * (z - parallel);
    return parallel_transport(m, frame.base, w, 1.0, scaled);
  };
  if (m.kind() == ManifoldKind::Euclidean) {
    c.hessian_action = [d](const Point&, const Tangent& u) -> Tangent { return d * u; };
    c.lipschitz = Eigen::SelfAdjointEigenSolver<Mat>(d).eigenvalues().cwiseAbs().maxCoeff();
  }
  if (params.lipschitz) c.lipschitz = params.lipschitz;
  c.critical_points.push_back({p, label_from_spectrum(Eigen::SelfAdjointEigenSolver<Mat>(d).eigenvalues())});
  return c;
}

CostModel make_product_sphere_rayleigh(const CostParams& params, const ManifoldSpec& m) {
  require_manifold("product_sphere_rayleigh", m,
                   m.kind() == ManifoldKind::ProductSpheres || m.kind() == ManifoldKind::Sphere,
                   "a product of spheres");
  const auto& blocks = m.blocks();
  if (params.blocks.size() != blocks.size()) {
    throw ConfigError("product_sphere_rayleigh: need one block matrix per sphere factor (" +
                      std::to_string(blocks.size()) + ")");
  }
  const int n = m.ambient_dim();
  Mat total = Mat::Zero(n, n);
  double block_lipschitz = 0.0;
  std::vector<Eigen::SelfAdjointEigenSolver<Mat>> solvers;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const Mat a = require_symmetric("product_sphere_rayleigh block " + std::to_string(i), params.blocks[i],
                                    blocks[i].size);
    total.block(blocks[i].offset, blocks[i].offset, blocks[i].size, blocks[i].size) = a;
    solvers.emplace_back(a);
    const Vec& lam = solvers.back().eigenvalues();
    block_lipschitz = std::max(block_lipschitz, 2.0 * (lam.maxCoeff() - lam.minCoeff()));
  }
  const bool coupled = params.coupling.has_value();
  if (coupled) total += require_symmetric("product_sphere_rayleigh coupling", params.coupling, n);

  CostModel c;
  c.name = "product_sphere_rayleigh";
  c.value = [total](const Point& x) { return x.dot(total * x); };
  c.gradient = [total, m](const Point& x) { return egrad_to_rgrad(m, x, 2.0 * total * x); };
  c.hessian_action = [total, m](const Point& x, const Tangent& u) {
    return ehess_to_rhess(m, x, 2.0 * total * x, 2.0 * total * u, u);
  };
  if (coupled) {
    // f is unchanged up to a constant by shifting the matrix by a multiple of
    // I, so the spread of the spectrum bounds the Hessian.
    const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(total).eigenvalues();
    c.lipschitz = (lam.maxCoeff() - lam.minCoeff()) * (1.0 + std::sqrt(static_cast<double>(blocks.size())));
  } else {
    c.lipschitz = block_lipschitz;
    Point minimizer(n);
    bool strict = true;
    for (size_t i = 0; i < blocks.size(); ++i) {
      const Vec& lam = solvers[i].eigenvalues();
      minimizer.segment(blocks[i].offset, blocks[i].size) = solvers[i].eigenvectors().col(0);
      strict = strict && lam.size() > 1 && lam(1) > lam(0) + 1e-12;
    }
    c.critical_points.push_back({minimizer, strict ? CriticalLabel::Minimizer : CriticalLabel::Degenerate});
    const Vec& lam0 = solvers[0].eigenvalues();
    if (lam0.maxCoeff() > lam0.minCoeff() + 1e-12) {
      Point saddle = minimizer;
      saddle.segment(blocks[0].offset, blocks[0].size) = solvers[0].eigenvectors().col(lam0.size() - 1);
      c.critical_points.push_back({saddle, CriticalLabel::StrictSaddle});
    }
  }
  return c;
}

}  // namespace

Transition smooth_transition(double t) {
  struct Bump {
    double u, d1, d2;
  };
  // u(t) = exp(-3/t) and derivatives; exactly zero where exp underflows.
  const auto bump = [](double s) -> Bump {
    if (s <= 0.0 || 3.0 / s > 745.0) return {0.0, 0.0, 0.0};
    const double u = std::exp(-3.0 / s);
    const double inv = 1.0 / s;
    return {u, u * 3.0 * inv * inv, u * (9.0 * inv * inv * inv * inv - 6.0 * inv * inv * inv)};
  };
  const Bump a = bump(t);
  const Bump br = bump(3.0 - t);
  const double b = br.u, db = -br.d1, ddb = br.d2;
  const double sum = a.u + b;
  const double num = a.d1 * b - a.u * db;
  const double num_d = a.d2 * b - a.u * ddb;
  const double dsum = a.d1 + db;
  return {a.u / sum, num / (sum * sum), (num_d * sum - 2.0 * num * dsum) / (sum * sum * sum)};
}

const std::vector<std::string>& builtin_cost_names() {
  static const std::vector<std::string> names = {"quadratic", "cubic1d", "interp2d",
                                                  "rayleigh",  "normal_coord_quadratic", "product_sphere_rayleigh"};
  return names;
}

CostModel builtin_cost(const std::string& name, const CostParams& params, const ManifoldSpec& m) {
  if (name == "quadratic") return make_quadratic(params, m);
  if (name == "cubic1d") return make_cubic1d(m);
  if (name == "interp2d") return make_interp2d(m);
  if (name == "rayleigh") return make_rayleigh(params, m);
  if (name == "normal_coord_quadratic") return make_normal_coord_quadratic(params, m);
  if (name == "product_sphere_rayleigh") return make_product_sphere_rayleigh(params, m);
  throw ConfigError("unknown cost '" + name + "'");
}

Tangent hessian_apply(const CostModel& cost, const ManifoldSpec& m, const Point& x, const Tangent& u) {
  if (cost.hessian_action) return cost.hessian_action(x, u);
  const double len = norm(m, x, u);
  if (len == 0.0) return Tangent::Zero(x.size());
  const Tangent dir = u / len;
  const double h = 1e-3;
  auto grad_at = [&](double s) { return cost.gradient(retract(m, RetractionKind::Exponential, x, s * dir)); };
  const Vec diff = (-grad_at(2.0 * h) + 8.0 * grad_at(h) - 8.0 * grad_at(-h) + grad_at(-2.0 * h)) / (12.0 * h);
  return len * project_tangent(m, x, diff);
}

Mat hessian_matrix(const CostModel& cost, const ManifoldSpec& m, const Frame& frame) {
  const Mat h = operator_matrix(m, frame, [&](const Tangent& u) { return hessian_apply(cost, m, frame.base, u); });
  return 0.5 * (h + h.transpose());
}

std::string to_string(CriticalClass c) {
  switch (c) {
    case CriticalClass::NotCritical: return "NotCritical";
    case CriticalClass::StrictSaddle: return "StrictSaddle";
    case CriticalClass::MinimizerCandidate: return "MinimizerCandidate";
    case CriticalClass::Degenerate: return "Degenerate";
  }
  return "unknown";
}

double default_tol_g(double value) { return 1e-8 * (1.0 + std::abs(value)); }

CriticalClass classify_critical_point(const CostModel& cost, const ManifoldSpec& m, const Point& x,
                                      const ClassifyTolerances& tol) {
  const double tol_g = tol.tol_g.value_or(default_tol_g(cost.value(x)));
  if (!(norm(m, x, cost.gradient(x)) <= tol_g)) return CriticalClass::NotCritical;
  const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(hessian_matrix(cost, m, tangent_frame(m, x))).eigenvalues();
  if (lam.minCoeff() < -tol.tol_lambda) return CriticalClass::StrictSaddle;
  if (lam.minCoeff() > tol.tol_lambda) return CriticalClass::MinimizerCandidate;
  return CriticalClass::Degenerate;
}

}  // namespace saddlelab
