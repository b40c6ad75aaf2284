#pragma once

#include <Eigen/Dense>

namespace slipflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace slipflow
