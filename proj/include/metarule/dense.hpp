#pragma once

#include <Eigen/Core>

namespace metarule {

// n x k factors and metafeature matrices: rows are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// k x m loadings: each feature's k loadings (one column) are contiguous.
using ColMatrix = Eigen::MatrixXd;

}  // namespace metarule
