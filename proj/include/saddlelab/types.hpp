#pragma once

#include <Eigen/Dense>

namespace saddlelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Points and tangent vectors are stored in ambient coordinates. Stiefel
// matrices are flattened column-major.
using Point = Vec;
using Tangent = Vec;

}  // namespace saddlelab
