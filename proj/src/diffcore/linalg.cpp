#include "tghcp/diffcore/linalg.hpp"

#include "tghcp/errors.hpp"

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <vector>

namespace tghcp::diff {

namespace {

void validate_symmetric(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw ValidationError("eigendecomposition requires a square matrix");
  if (s.size() == 0) throw ValidationError("eigendecomposition of an empty matrix");
  if (!s.allFinite()) throw ValidationError("matrix contains non-finite entries");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw ValidationError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
}

// LAPACK returns ascending order; flip to descending.
SymmetricEigen descending(const Eigen::VectorXd& w, const Eigen::MatrixXd& z) {
  SymmetricEigen out;
  out.values = w.reverse();
  out.vectors = z.rowwise().reverse();
  return out;
}

}  // namespace

SymmetricEigen symmetric_eigendecomposition(const Eigen::MatrixXd& s) {
  validate_symmetric(s);
  const lapack_int n = static_cast<lapack_int>(s.rows());
  Eigen::MatrixXd a = s;
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, a.data(), n, w.data());
  if (info != 0) throw NumericError("dsyevd failed with info=" + std::to_string(info));
  return descending(w, a);
}

SymmetricEigen symmetric_eigendecomposition(const Eigen::MatrixXd& s, int count) {
  validate_symmetric(s);
  const lapack_int n = static_cast<lapack_int>(s.rows());
  if (count < 1 || count > n) {
    throw ValidationError("requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(n) +
                          "x" + std::to_string(n) + " matrix");
  }
  if (count == n) return symmetric_eigendecomposition(s);
  Eigen::MatrixXd a = s;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0,
                                         n - count + 1, n, 0.0, &found, w.data(), z.data(), n,
                                         support.data());
  if (info != 0 || found != count) throw NumericError("dsyevr failed with info=" + std::to_string(info));
  return descending(w.head(count), z);
}

}  // namespace tghcp::diff
