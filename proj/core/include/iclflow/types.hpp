#pragma once

#include <Eigen/Dense>

namespace iclflow {

/// Dense double-precision matrix, row-major storage.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Dense double-precision column vector.
using Vec = Eigen::VectorXd;

}  // namespace iclflow
