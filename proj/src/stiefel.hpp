#pragma once

// Stiefel manifold St(n, p) with the embedded metric <U, V> = Tr(U^T V).
// Internal to the geometry module; points and tangents are flattened
// column-major n*p vectors.

#include "saddlelab/types.hpp"

namespace saddlelab::stiefel {

Mat unflatten(const Vec& x, int n, int p);
Vec flatten(const Mat& x);

Vec project_tangent(const Vec& x, const Vec& z, int n, int p);
/// Polar factor of z; DomainError when z is (numerically) rank deficient.
Vec polar(const Vec& z, int n, int p);
Vec exp(const Vec& x, const Vec& v, int n, int p);

struct GeodesicState {
  Mat position;
  Mat velocity;
};
GeodesicState geodesic(const Vec& x, const Vec& v, double t, int n, int p);

/// Parallel transport of each column of `vectors` along t -> Exp_x(t v),
/// t in [0, t_end], by integrating V' = (d/dt P_{Y(t)}) V.
Mat transport_geodesic(const Vec& x, const Vec& v, double t_end, const Mat& vectors, int n, int p);
/// Same along the projection-retraction curve t -> polar(x + t v), t in [0, 1].
Mat transport_projection_curve(const Vec& x, const Vec& v, const Mat& vectors, int n, int p);

}  // namespace saddlelab::stiefel
