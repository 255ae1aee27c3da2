#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's closed forms: geodesics, transport and Jacobi fields come from
// numerically integrating their defining ODEs in ambient coordinates.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Minkowski form -a0 b0 + sum a_i b_i (curvature -1 hyperboloid).
inline double minkowski(const Vec& a, const Vec& b) { return -a(0) * b(0) + a.tail(a.size() - 1).dot(b.tail(b.size() - 1)); }

enum class Space { Sphere, Hyperbolic };

// Geodesic equation of the embedded model: x'' = -<x',x'> x on the sphere,
// x'' = <x',x'>_L x on the hyperboloid. Transported vectors obey
// V' = -<x',V> x and V' = <x',V>_L x respectively.
struct State {
  Vec x, v;
  std::vector<Vec> carried;
};

inline State derivative(Space s, const State& st) {
  State d;
  d.x = st.v;
  if (s == Space::Sphere) {
    d.v = -st.v.squaredNorm() * st.x;
    for (const auto& w : st.carried) d.carried.push_back(-st.v.dot(w) * st.x);
  } else {
    d.v = minkowski(st.v, st.v) * st.x;
    for (const auto& w : st.carried) d.carried.push_back(minkowski(st.v, w) * st.x);
  }
  return d;
}

inline State axpy(const State& a, double h, const State& d) {
  State out{a.x + h * d.x, a.v + h * d.v, {}};
  for (size_t i = 0; i < a.carried.size(); ++i) out.carried.push_back(a.carried[i] + h * d.carried[i]);
  return out;
}

/// RK4 integration of the geodesic from (x, v) to time t, carrying vectors.
inline State integrate_geodesic(Space s, const Vec& x, const Vec& v, double t, std::vector<Vec> carried = {},
                                int steps = 4000) {
  State st{x, v, std::move(carried)};
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const State k1 = derivative(s, st);
    const State k2 = derivative(s, axpy(st, 0.5 * h, k1));
    const State k3 = derivative(s, axpy(st, 0.5 * h, k2));
    const State k4 = derivative(s, axpy(st, h, k3));
    State next = st;
    next.x += h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    next.v += h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    for (size_t j = 0; j < st.carried.size(); ++j) {
      next.carried[j] += h / 6.0 * (k1.carried[j] + 2 * k2.carried[j] + 2 * k3.carried[j] + k4.carried[j]);
    }
    st = std::move(next);
  }
  return st;
}

/// Scalar Jacobi equation y'' = -K y along a unit-speed geodesic of length r,
/// integrated with RK4; returns (y(r), y'(r)) for initial (y0, dy0).
inline std::pair<double, double> jacobi_scalar(double k, double r, double y0, double dy0, int steps = 4000) {
  double y = y0, dy = dy0;
  const double h = r / steps;
  auto f = [k](double a, double b) { return std::pair<double, double>{b, -k * a}; };
  for (int i = 0; i < steps; ++i) {
    auto [a1, b1] = f(y, dy);
    auto [a2, b2] = f(y + 0.5 * h * a1, dy + 0.5 * h * b1);
    auto [a3, b3] = f(y + 0.5 * h * a2, dy + 0.5 * h * b2);
    auto [a4, b4] = f(y + h * a3, dy + h * b3);
    y += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    dy += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  return {y, dy};
}

/// Central difference of a scalar function of one variable.
inline double central(const std::function<double(double)>& f, double h) { return (f(h) - f(-h)) / (2.0 * h); }

/// Central-difference Euclidean gradient.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec e = Vec::Zero(x.size());
    e(i) = h;
    g(i) = (f(x + e) - f(x - e)) / (2.0 * h);
  }
  return g;
}

/// Central-difference Euclidean Hessian from function values.
inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-4) {
  const auto n = x.size();
  Mat hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
      ei(i) = h;
      ej(j) = h;
      hess(i, j) = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h * h);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

/// Richardson extrapolation of fd_hessian, cancelling the h^2 error term.
inline Mat fd_hessian_richardson(const std::function<double(const Vec&)>& f, const Vec& x, double h = 2e-4) {
  return (4.0 * fd_hessian(f, x, 0.5 * h) - fd_hessian(f, x, h)) / 3.0;
}

/// Roots of a continuous scalar function on (0, hi] by dense sampling and
/// bisection; independent of any eigen-solver.
inline std::vector<double> brute_roots(const std::function<double(double)>& f, double hi, int samples = 200000) {
  std::vector<double> roots;
  double prev_x = 0.0, prev = f(0.0);
  for (int k = 1; k <= samples; ++k) {
    const double x = hi * k / samples;
    const double v = f(x);
    if (v == 0.0) {
      roots.push_back(x);
    } else if ((prev > 0.0) != (v > 0.0) && prev != 0.0) {
      double lo = prev_x, up = x;
      const bool lo_pos = prev > 0.0;
      for (int it = 0; it < 200 && up - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + up);
        if ((f(mid) > 0.0) == lo_pos) {
          lo = mid;
        } else {
          up = mid;
        }
      }
      roots.push_back(0.5 * (lo + up));
    }
    prev_x = x;
    prev = v;
  }
  return roots;
}

inline Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.norm();
}

inline Vec random_gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

}  // namespace oracle
