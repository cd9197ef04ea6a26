#pragma once

#include <Eigen/Dense>

namespace tghcp::diff {

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // column k pairs with values[k], orthonormal
};

/// Full eigendecomposition of a dense symmetric matrix. Rejects inputs whose
/// asymmetry max|S - S^T| exceeds 1e-10 * max(1, max|S|).
SymmetricEigen symmetric_eigendecomposition(const Eigen::MatrixXd& s);

/// Leading `count` eigenpairs only (same ordering and validation).
SymmetricEigen symmetric_eigendecomposition(const Eigen::MatrixXd& s, int count);

}  // namespace tghcp::diff
