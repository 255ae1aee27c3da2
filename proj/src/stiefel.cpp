#include "stiefel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <unsupported/Eigen/MatrixFunctions>

#include "saddlelab/errors.hpp"

namespace saddlelab::stiefel {
namespace {

Mat sym(const Mat& a) { return 0.5 * (a + a.transpose()); }

// Derivative of the tangent projector along a curve, applied to v:
// d/dt P_Y(V) = -Ydot sym(Y^T V) - Y sym(Ydot^T V).
Mat projector_derivative(const Mat& y, const Mat& ydot, const Mat& v) {
  return -ydot * sym(y.transpose() * v) - y * sym(ydot.transpose() * v);
}

using CurveFn = std::function<GeodesicState(double)>;

// Classical RK4 on V' = dP V for a batch of flattened tangent vectors.
Mat integrate_transport(const CurveFn& curve, double t_end, const Mat& vectors, int n, int p,
                        int steps) {
  Mat out = vectors;
  const double h = t_end / steps;
  auto rhs = [&](const GeodesicState& s, const Mat& batch) {
    Mat d(batch.rows(), batch.cols());
    for (Eigen::Index k = 0; k < batch.cols(); ++k) {
      d.col(k) = flatten(projector_derivative(s.position, s.velocity, unflatten(batch.col(k), n, p)));
    }
    return d;
  };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const GeodesicState s0 = curve(t);
    const GeodesicState sm = curve(t + 0.5 * h);
    const GeodesicState s1 = curve(t + h);
    const Mat k1 = rhs(s0, out);
    const Mat k2 = rhs(sm, out + 0.5 * h * k1);
    const Mat k3 = rhs(sm, out + 0.5 * h * k2);
    const Mat k4 = rhs(s1, out + h * k3);
    out += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const GeodesicState end = curve(t_end);
  const Vec y_end = flatten(end.position);
  for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) = project_tangent(y_end, out.col(k), n, p);
  return out;
}

int transport_steps(double length) { return std::max(64, static_cast<int>(std::ceil(64.0 * length))); }

}  // namespace

Mat unflatten(const Vec& x, int n, int p) { return Eigen::Map<const Mat>(x.data(), n, p); }

Vec flatten(const Mat& x) { return Eigen::Map<const Vec>(x.data(), x.size()); }

Vec project_tangent(const Vec& x, const Vec& z, int n, int p) {
  const Mat xm = unflatten(x, n, p);
  const Mat zm = unflatten(z, n, p);
  return flatten(zm - xm * sym(xm.transpose() * zm));
}

Vec polar(const Vec& z, int n, int p) {
  const Mat zm = unflatten(z, n, p);
  Eigen::JacobiSVD<Mat> svd(zm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.minCoeff() <= 1e-12 * std::max(1.0, s.maxCoeff())) {
    throw DomainError("projection retraction: x + v is rank deficient");
  }
  return flatten(svd.matrixU() * svd.matrixV().transpose());
}

GeodesicState geodesic(const Vec& x, const Vec& v, double t, int n, int p) {
  const Mat xm = unflatten(x, n, p);
  const Mat vm = unflatten(v, n, p);
  const Mat a = xm.transpose() * vm;
  const Mat s = vm.transpose() * vm;
  const Mat id = Mat::Identity(p, p);

  Mat block(2 * p, 2 * p);
  block << a, -s, id, a;
  Mat xv(n, 2 * p);
  xv << xm, vm;

  const Mat phi = xv * (t * block).exp();
  const Mat ea = (-t * a).exp();
  Mat tail = Mat::Zero(2 * p, p);
  tail.topRows(p) = ea;
  Mat tail_dot = Mat::Zero(2 * p, p);
  tail_dot.topRows(p) = -a * ea;

  return {phi * tail, phi * (block * tail + tail_dot)};
}

Vec exp(const Vec& x, const Vec& v, int n, int p) {
  if (v.isZero(0.0)) return x;
  return flatten(geodesic(x, v, 1.0, n, p).position);
}

Mat transport_geodesic(const Vec& x, const Vec& v, double t_end, const Mat& vectors, int n, int p) {
  if (v.isZero(0.0) || t_end == 0.0) return vectors;
  const CurveFn curve = [&](double t) { return geodesic(x, v, t, n, p); };
  return integrate_transport(curve, t_end, vectors, n, p, transport_steps(std::abs(t_end) * v.norm()));
}

Mat transport_projection_curve(const Vec& x, const Vec& v, const Mat& vectors, int n, int p) {
  if (v.isZero(0.0)) return vectors;
  const double fd = 1e-6;
  const CurveFn curve = [&](double t) {
    const Vec c = polar(x + t * v, n, p);
    const Vec cdot = (polar(x + (t + fd) * v, n, p) - polar(x + (t - fd) * v, n, p)) / (2.0 * fd);
    return GeodesicState{unflatten(c, n, p), unflatten(cdot, n, p)};
  };
  return integrate_transport(curve, 1.0, vectors, n, p, transport_steps(v.norm()));
}

}  // namespace saddlelab::stiefel
