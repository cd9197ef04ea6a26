#include "tghcp/randfield/kle.hpp"

#include "tghcp/diffcore/linalg.hpp"
#include "tghcp/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

namespace tghcp::randfield {

void CovarianceSpec::validate() const {
  if (!(variance >= 0.0)) throw ValidationError("log-conductivity variance must be non-negative");
  if (!(correlation_length > 0.0)) throw ValidationError("correlation length must be positive");
  if (nx <= 0 || ny <= 0) throw ValidationError("grid resolution must be positive");
  if (!(domain_x > 0.0) || !(domain_y > 0.0)) throw ValidationError("domain size must be positive");
}

void ConductivityField::validate() const {
  if (nx <= 0 || ny <= 0 || k.size() != static_cast<Eigen::Index>(nx) * ny) {
    throw ValidationError("conductivity field size does not match its grid");
  }
  for (Eigen::Index p = 0; p < k.size(); ++p) {
    if (!(k[p] > 0.0) || !std::isfinite(k[p])) {
      throw ValidationError("conductivity must be positive and finite at every cell");
    }
  }
}

Eigen::VectorXd KleBasis::pointwise_variance() const {
  return modes.array().square().matrix() * eigenvalues;
}

Eigen::MatrixXd build_covariance(const CovarianceSpec& spec) {
  spec.validate();
  const int n = spec.cells();
  Eigen::VectorXd x(n), y(n);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      x[j * spec.nx + i] = (i + 0.5) * spec.dx();
      y[j * spec.nx + i] = (j + 0.5) * spec.dy();
    }
  }
  Eigen::MatrixXd cov(n, n);
  for (int q = 0; q < n; ++q) {
    for (int p = q; p < n; ++p) {
      const double d = std::abs(x[p] - x[q]) + std::abs(y[p] - y[q]);
      const double c = spec.variance * std::exp(-d / spec.correlation_length);
      cov(p, q) = c;
      cov(q, p) = c;
    }
  }
  return cov;
}

KleBasis decompose(const Eigen::MatrixXd& cov, const CovarianceSpec& spec, int terms) {
  if (terms < 1 || terms > cov.rows()) {
    throw ValidationError("KLE term count " + std::to_string(terms) + " must be in [1, " +
                          std::to_string(cov.rows()) + "]");
  }
  if (cov.rows() != spec.cells()) throw ValidationError("covariance size does not match the grid");
  diff::SymmetricEigen eig = diff::symmetric_eigendecomposition(cov, terms);
  KleBasis basis;
  basis.spec = spec;
  basis.eigenvalues = eig.values;
  basis.modes = std::move(eig.vectors);
  return basis;
}

KleBasis build_basis(const CovarianceSpec& spec, int terms) {
  return decompose(build_covariance(spec), spec, terms);
}

ConductivityField sample_field(const KleBasis& basis, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != basis.terms()) {
    throw ValidationError("expected " + std::to_string(basis.terms()) + " KLE coefficients, got " +
                          std::to_string(xi.size()));
  }
  ConductivityField f;
  f.nx = basis.spec.nx;
  f.ny = basis.spec.ny;
  f.dx = basis.spec.dx();
  f.dy = basis.spec.dy();
  f.xi.assign(xi.begin(), xi.end());
  Eigen::VectorXd weights(basis.terms());
  for (int m = 0; m < basis.terms(); ++m) {
    // Round-off can leave tiny negative eigenvalues.
    weights[m] = std::sqrt(std::max(basis.eigenvalues[m], 0.0)) * xi[m];
  }
  f.log_k = basis.modes * weights;
  f.k = f.log_k.array().exp().matrix();
  return f;
}

std::vector<double> standard_normal_coefficients(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xi(static_cast<std::size_t>(count));
  for (double& v : xi) v = normal(rng);
  return xi;
}

ConductivityField sample_field(const KleBasis& basis, std::uint64_t seed) {
  const std::vector<double> xi = standard_normal_coefficients(basis.terms(), seed);
  ConductivityField f = sample_field(basis, std::span<const double>(xi));
  f.seed = seed;
  return f;
}

ConductivityField homogeneous_field(int nx, int ny, double dx, double dy, double value) {
  if (!(value > 0.0)) throw ValidationError("homogeneous conductivity must be positive");
  ConductivityField f;
  f.nx = nx;
  f.ny = ny;
  f.dx = dx;
  f.dy = dy;
  f.k = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nx) * ny, value);
  f.log_k = Eigen::VectorXd::Constant(f.k.size(), std::log(value));
  return f;
}

void save_field(const std::string& path, const ConductivityField& field, const CovarianceSpec& spec) {
  nlohmann::json j;
  j["header"] = {{"nx", field.nx},
                 {"ny", field.ny},
                 {"dx", field.dx},
                 {"dy", field.dy},
                 {"seed", field.seed ? nlohmann::json(*field.seed) : nlohmann::json(nullptr)},
                 {"terms", field.xi.size()},
                 {"correlation_length", spec.correlation_length},
                 {"variance", spec.variance}};
  j["xi"] = field.xi;
  j["k"] = std::vector<double>(field.k.data(), field.k.data() + field.k.size());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << '\n';
}

ConductivityField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
    ConductivityField f;
    const auto& h = j.at("header");
    f.nx = h.at("nx").get<int>();
    f.ny = h.at("ny").get<int>();
    f.dx = h.at("dx").get<double>();
    f.dy = h.at("dy").get<double>();
    if (!h.at("seed").is_null()) f.seed = h.at("seed").get<std::uint64_t>();
    f.xi = j.at("xi").get<std::vector<double>>();
    const auto k = j.at("k").get<std::vector<double>>();
    f.k = Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<Eigen::Index>(k.size()));
    f.log_k = f.k.array().log().matrix();
    f.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace tghcp::randfield
