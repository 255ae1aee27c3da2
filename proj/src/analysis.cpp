#include "saddlelab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "saddlelab/errors.hpp"

namespace saddlelab {
namespace {

Mat identity(const Frame& f) { return Mat::Identity(f.basis.cols(), f.basis.cols()); }

Point apply_map(const CostModel& cost, const ManifoldSpec& m, const MapKind& map, const Point& x, double alpha,
                const ProximalInnerConfig& inner) {
  if (map.type == MapKind::Type::ProximalPoint) return proximal_step(cost, m, x, alpha, inner).y;
  return retract(m, map.retraction, x, -alpha * cost.gradient(x));
}

// Frame at g(x), transported along the curve the map follows.
Frame image_frame(const CostModel& cost, const ManifoldSpec& m, const MapKind& map, const Frame& source, double alpha,
                  const Point& image) {
  if (map.type == MapKind::Type::ProximalPoint) {
    return transport_frame(m, RetractionKind::Exponential, source, log_map(m, source.base, image));
  }
  return transport_frame(m, map.retraction, source, -alpha * cost.gradient(source.base));
}

DifferentialMatrix finite_difference(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                     const Frame& source, double alpha) {
  const bool prox = map.type == MapKind::Type::ProximalPoint;
  // The proximal map is only known to the inner tolerance, so it gets a
  // tighter solve and a wider stencil.
  const ProximalInnerConfig inner{1e-13, 1000000};
  const double h = (prox ? 1e-4 : 1e-5) * (1.0 + source.base.norm());
  const Point y = apply_map(cost, m, map, source.base, alpha, inner);
  DifferentialMatrix out{source, image_frame(cost, m, map, source, alpha, y), Mat(), DifferentialMethod::FiniteDifference};
  const auto n = source.basis.cols();
  out.entries.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Tangent e = source.basis.col(j);
    const Point plus = apply_map(cost, m, map, retract(m, RetractionKind::Exponential, source.base, h * e), alpha, inner);
    const Point minus =
        apply_map(cost, m, map, retract(m, RetractionKind::Exponential, source.base, -h * e), alpha, inner);
    const Tangent column = project_tangent(m, y, (plus - minus) / (2.0 * h));
    out.entries.col(j) = frame_coordinates(m, out.target_frame, column);
  }
  return out;
}

DifferentialMatrix closed_form_euclidean(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                         const Frame& source, double alpha) {
  if (m.kind() != ManifoldKind::Euclidean || !cost.hessian_action) {
    throw ConfigError("closed-form Euclidean differential needs Euclidean space and an analytic Hessian");
  }
  if (map.type == MapKind::Type::ProximalPoint) {
    const Point y = proximal_step(cost, m, source.base, alpha, {1e-13, 1000000}).y;
    const Frame target = tangent_frame(m, y);
    const Mat h = hessian_matrix(cost, m, target);
    return {source, target, (identity(source) + alpha * h).inverse(), DifferentialMethod::ClosedFormEuclidean};
  }
  const Mat h = hessian_matrix(cost, m, source);
  const Point y = retract(m, map.retraction, source.base, -alpha * cost.gradient(source.base));
  return {source, tangent_frame(m, y), identity(source) - alpha * h, DifferentialMethod::ClosedFormEuclidean};
}

// Dg(x) = J0(1) (Hess h(x) - alpha Hess f(x)) with h = dist(., g(x))^2 / 2,
// valid for the exponential map below the conjugate radius. The proximal map
// inverts the same formula for gradient ascent at y = g_PP(x), which lands
// back on x.
DifferentialMatrix closed_form_jacobi(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                      const Frame& source, double alpha) {
  if (!m.has_blockwise_constant_curvature()) {
    throw ConfigError("Jacobi closed form needs constant curvature, got " + m.describe());
  }
  if (map.type == MapKind::Type::ProximalPoint) {
    const Point y = proximal_step(cost, m, source.base, alpha, {1e-13, 1000000}).y;
    const Frame target = transport_frame(m, RetractionKind::Exponential, source, log_map(m, source.base, y));
    const Tangent ascent = alpha * cost.gradient(y);
    const JacobiEndpoints jac = jacobi_endpoints(m, target, ascent);
    const Mat forward = jac.j0 * (hess_half_sq_dist(m, target, source.base) + alpha * hessian_matrix(cost, m, target));
    return {source, target, forward.inverse(), DifferentialMethod::ClosedFormJacobi};
  }
  if (map.retraction != RetractionKind::Exponential) {
    throw ConfigError("Jacobi closed form applies to the exponential map only");
  }
  const Tangent v = -alpha * cost.gradient(source.base);
  if (!(norm(m, source.base, v) < m.injectivity_radius())) {
    throw ConfigError("Jacobi closed form needs α‖grad f(x)‖ below the injectivity radius");
  }
  const JacobiEndpoints jac = jacobi_endpoints(m, source, v);
  const Point y = jac.target.base;
  const Mat entries = jac.j0 * (hess_half_sq_dist(m, source, y) - alpha * hessian_matrix(cost, m, source));
  return {source, jac.target, entries, DifferentialMethod::ClosedFormJacobi};
}

DifferentialMatrix closed_form_critical(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                        const Frame& source, double alpha) {
  const double gn = norm(m, source.base, cost.gradient(source.base));
  if (!(gn <= default_tol_g(cost.value(source.base)))) {
    throw ConfigError("critical-point closed form requires grad f(x) = 0 (norm " + std::to_string(gn) + ")");
  }
  const Mat h = hessian_matrix(cost, m, source);
  const Mat entries = map.type == MapKind::Type::ProximalPoint ? Mat((identity(source) + alpha * h).inverse())
                                                               : Mat(identity(source) - alpha * h);
  return {source, source, entries, DifferentialMethod::ClosedFormCritical};
}

double smallest_singular_ratio(const Mat& a) {
  const Vec s = Eigen::JacobiSVD<Mat>(a).singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

}  // namespace

std::string to_string(const MapKind& map) {
  if (map.type == MapKind::Type::ProximalPoint) return "proximal_point";
  return "fixed_step_" + to_string(map.retraction);
}

std::string to_string(DifferentialMethod m) {
  switch (m) {
    case DifferentialMethod::FiniteDifference: return "FiniteDifference";
    case DifferentialMethod::ClosedFormEuclidean: return "ClosedFormEuclidean";
    case DifferentialMethod::ClosedFormJacobi: return "ClosedFormJacobi";
    case DifferentialMethod::ClosedFormCritical: return "ClosedFormCritical";
  }
  return "unknown";
}

DifferentialMatrix iteration_map_differential(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                              const Point& x, double alpha, DifferentialMethod method) {
  return iteration_map_differential(cost, m, map, tangent_frame(m, x), alpha, method);
}

DifferentialMatrix iteration_map_differential(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                              const Frame& source, double alpha, DifferentialMethod method) {
  if (map.type == MapKind::Type::FixedStepRetraction && !m.supports(map.retraction)) {
    throw ConfigError(to_string(map.retraction) + " retraction is not available on " + m.describe());
  }
  switch (method) {
    case DifferentialMethod::FiniteDifference: return finite_difference(cost, m, map, source, alpha);
    case DifferentialMethod::ClosedFormEuclidean: return closed_form_euclidean(cost, m, map, source, alpha);
    case DifferentialMethod::ClosedFormJacobi: return closed_form_jacobi(cost, m, map, source, alpha);
    case DifferentialMethod::ClosedFormCritical: return closed_form_critical(cost, m, map, source, alpha);
  }
  throw ConfigError("unknown differential method");
}

SingularSet singular_alpha_scan(const CostModel& cost, const ManifoldSpec& m, const MapKind& map, const Point& x,
                                double alpha_max, int grid_size) {
  if (!(alpha_max > 0.0) || !std::isfinite(alpha_max)) throw ConfigError("scan: alpha_max must be > 0");
  if (grid_size < 2) throw ConfigError("scan: grid_size must be >= 2");
  SingularSet out{x, {}, alpha_max, ""};

  // det(I - alpha H) vanishes exactly at the reciprocals of the positive
  // eigenvalues of H.
  if (m.kind() == ManifoldKind::Euclidean && cost.hessian_action && map.type == MapKind::Type::FixedStepRetraction) {
    out.method = "eigenvalue_reciprocals";
    const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(hessian_matrix(cost, m, tangent_frame(m, x))).eigenvalues();
    for (Eigen::Index i = lam.size() - 1; i >= 0; --i) {
      if (!(lam(i) > 0.0)) continue;
      const double a = 1.0 / lam(i);
      if (a > alpha_max) continue;
      if (!out.alphas.empty() && a - out.alphas.back() <= 1e-12 * a) continue;
      out.alphas.push_back(a);
    }
    return out;
  }

  out.method = "determinant_bisection";
  const Frame source = tangent_frame(m, x);
  const bool jacobi = map.type == MapKind::Type::FixedStepRetraction && map.retraction == RetractionKind::Exponential &&
                      m.has_blockwise_constant_curvature();
  const DifferentialMethod method = jacobi ? DifferentialMethod::ClosedFormJacobi : DifferentialMethod::FiniteDifference;
  // Past the injectivity radius the Jacobi form no longer applies and the
  // scan continues with finite differences in the same transported frame.
  auto differential = [&](double a) -> std::optional<Mat> {
    try {
      return iteration_map_differential(cost, m, map, source, a, method).entries;
    } catch (const ConfigError&) {
      if (method == DifferentialMethod::FiniteDifference) return std::nullopt;
    } catch (const Error&) {
      return std::nullopt;  // outside the map's domain at this step size
    }
    try {
      return iteration_map_differential(cost, m, map, source, a, DifferentialMethod::FiniteDifference).entries;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  std::optional<double> prev_det = 1.0;
  double prev_alpha = 0.0;
  for (int k = 1; k <= grid_size; ++k) {
    const double a = alpha_max * k / grid_size;
    const auto d = differential(a);
    const std::optional<double> det = d ? std::optional<double>(d->determinant()) : std::nullopt;
    if (prev_det && det && (*prev_det > 0.0) != (*det > 0.0)) {
      double lo = prev_alpha, hi = a;
      const bool lo_positive = *prev_det > 0.0;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const auto dm = differential(mid);
        if (!dm) break;
        if ((dm->determinant() > 0.0) == lo_positive) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      const auto dr = differential(root);
      if (dr && smallest_singular_ratio(*dr) <= 1e-6 && (out.alphas.empty() || root > out.alphas.back())) {
        out.alphas.push_back(root);
      }
    }
    prev_det = det;
    prev_alpha = a;
  }
  return out;
}

std::string to_string(BoundRegime r) {
  switch (r) {
    case BoundRegime::Hadamard: return "hadamard";
    case BoundRegime::PositiveCurvature: return "positive-curvature";
    case BoundRegime::Pinched: return "pinched";
    case BoundRegime::Stiefel: return "stiefel";
    case BoundRegime::ProductSpheres: return "product-spheres";
  }
  return "unknown";
}

BoundRegime parse_bound_regime(const std::string& name) {
  for (BoundRegime r : {BoundRegime::Hadamard, BoundRegime::PositiveCurvature, BoundRegime::Pinched,
                        BoundRegime::Stiefel, BoundRegime::ProductSpheres}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown bound regime '" + name + "'");
}

double arccot(double t) {
  if (!(t > 0.0)) throw ConfigError("arccot is evaluated on t > 0 only");
  return std::atan(1.0 / t);
}

StepSizeBound step_size_bound(BoundRegime regime, const BoundInputs& in) {
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw ConfigError(std::string("step-size bound needs ") + name);
    if (!(*v > 0.0) || std::isnan(*v)) throw ConfigError(std::string(name) + " must be > 0");
    return *v;
  };
  const double lip = need(in.lipschitz, "L");
  double alpha = 0.0;
  switch (regime) {
    case BoundRegime::Hadamard:
    case BoundRegime::ProductSpheres:
      alpha = 1.0 / lip;
      break;
    case BoundRegime::PositiveCurvature: {
      const double g = need(in.gradient_bound, "G");
      const double j = need(in.injectivity, "J");
      const double t = lip / (g * std::sqrt(need(in.k_max, "K_max")));
      alpha = std::min(j * lip / g, t * arccot(t)) / lip;
      break;
    }
    case BoundRegime::Pinched: {
      const double k_min = need(in.k_min, "K_min");
      const double k_max = need(in.k_max, "K_max");
      if (k_min > k_max) throw ConfigError("pinched bound needs K_min <= K_max");
      const double t = std::sqrt(k_min / k_max) / std::numbers::pi;
      alpha = t * arccot(t) / lip;
      break;
    }
    case BoundRegime::Stiefel: {
      if (!in.stiefel_cols) throw ConfigError("step-size bound needs p");
      if (*in.stiefel_cols < 1) throw ConfigError("p must be >= 1");
      const double t = 1.0 / (std::numbers::pi * std::sqrt(static_cast<double>(*in.stiefel_cols)));
      alpha = t * arccot(t) / lip;
      break;
    }
  }
  return {regime, alpha, in};
}

std::vector<double> unstable_spectrum(const CostModel& cost, const ManifoldSpec& m, const MapKind& map,
                                      const Point& x_star, double alpha, const ClassifyTolerances& tol) {
  const double tol_g = tol.tol_g.value_or(default_tol_g(cost.value(x_star)));
  const double gn = norm(m, x_star, cost.gradient(x_star));
  if (!(gn <= tol_g)) {
    throw PreconditionError("unstable_spectrum needs a critical point (gradient norm " + std::to_string(gn) + ")");
  }
  const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(hessian_matrix(cost, m, tangent_frame(m, x_star))).eigenvalues();
  std::vector<double> out;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    out.push_back(map.type == MapKind::Type::ProximalPoint ? 1.0 / std::abs(1.0 + alpha * lam(i))
                                                           : std::abs(1.0 - alpha * lam(i)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double hess_dist_consistency(const ManifoldSpec& m, const Point& x, const Tangent& v) {
  const Frame frame = tangent_frame(m, x);
  const JacobiEndpoints jac = jacobi_endpoints(m, frame, v);
  const Point y = jac.target.base;
  const Mat closed = jac.j0.lu().solve(jac.j1);

  // grad of z -> dist(z, y)^2 / 2 is -Log_z(y); differentiate it along
  // geodesics with a fourth-order stencil and project back to T_x.
  const double h = 1e-4;
  const auto grad_at = [&](const Tangent& e, double s) -> Vec {
    return -log_map(m, retract(m, RetractionKind::Exponential, x, s * e), y);
  };
  const Mat fd = operator_matrix(m, frame, [&](const Tangent& e) -> Tangent {
    const Vec d = (-grad_at(e, 2 * h) + 8.0 * grad_at(e, h) - 8.0 * grad_at(e, -h) + grad_at(e, -2 * h)) / (12.0 * h);
    return project_tangent(m, x, d);
  });
  return (closed - fd).cwiseAbs().maxCoeff();
}

}  // namespace saddlelab
