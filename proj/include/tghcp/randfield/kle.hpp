#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tghcp::randfield {

/// Separable exponential covariance of log-conductivity on a cell-centred grid.
struct CovarianceSpec {
  double variance = 1.0;
  double correlation_length = 408.0;
  double domain_x = 1020.0;
  double domain_y = 1020.0;
  int nx = 51;
  int ny = 51;

  double dx() const { return domain_x / nx; }
  double dy() const { return domain_y / ny; }
  int cells() const { return nx * ny; }
  void validate() const;
};

/// Truncated Karhunen-Loeve basis. `modes` holds one orthonormal column per
/// retained term; cell index is j * nx + i.
struct KleBasis {
  CovarianceSpec spec;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd modes;

  int terms() const { return static_cast<int>(eigenvalues.size()); }
  /// Sum_i lambda_i phi_i(cell)^2, the model variance of ln K per cell.
  Eigen::VectorXd pointwise_variance() const;
};

struct ConductivityField {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> xi;
  std::optional<std::uint64_t> seed;
  Eigen::VectorXd log_k;
  Eigen::VectorXd k;

  double at(int i, int j) const { return k[static_cast<Eigen::Index>(j) * nx + i]; }
  void validate() const;
};

/// Entry (p,q) = variance * exp(-(|x_p-x_q| + |y_p-y_q|) / correlation_length).
Eigen::MatrixXd build_covariance(const CovarianceSpec& spec);

/// Leading `terms` eigenpairs of `cov`. Throws ValidationError when `terms`
/// exceeds the matrix size.
KleBasis decompose(const Eigen::MatrixXd& cov, const CovarianceSpec& spec, int terms);

/// Convenience: build_covariance + decompose.
KleBasis build_basis(const CovarianceSpec& spec, int terms);

/// ln K = sum_i sqrt(lambda_i) xi_i phi_i, K = exp(ln K).
ConductivityField sample_field(const KleBasis& basis, std::span<const double> xi);
/// Draws xi ~ N(0, I) from a seeded generator.
ConductivityField sample_field(const KleBasis& basis, std::uint64_t seed);
std::vector<double> standard_normal_coefficients(int count, std::uint64_t seed);

ConductivityField homogeneous_field(int nx, int ny, double dx, double dy, double value);

/// JSON grid file: header {nx, ny, dx, dy, seed, terms, correlation_length,
/// variance}, then xi and the row-major K values.
void save_field(const std::string& path, const ConductivityField& field, const CovarianceSpec& spec);
ConductivityField load_field(const std::string& path);

}  // namespace tghcp::randfield
