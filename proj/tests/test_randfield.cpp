#include "tghcp/errors.hpp"
#include "tghcp/randfield/kle.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace tghcp;
using namespace tghcp::randfield;

namespace {

CovarianceSpec small_spec(int n, double eta = 408.0, double var = 1.0) {
  CovarianceSpec s;
  s.nx = n;
  s.ny = n;
  s.domain_x = 20.0 * n;
  s.domain_y = 20.0 * n;
  s.correlation_length = eta;
  s.variance = var;
  return s;
}

}  // namespace

TEST_CASE("covariance kernel values") {
  const CovarianceSpec s = small_spec(6);
  const Eigen::MatrixXd c = build_covariance(s);
  CHECK(c.rows() == 36);
  CHECK((c.diagonal().array() == 1.0).all());
  // cells (0,0) and (1,0) are 20 apart in x
  CHECK(c(0, 1) == doctest::Approx(0.9522).epsilon(1e-4));
  CHECK(c(0, 1) == doctest::Approx(std::exp(-20.0 / 408.0)).epsilon(1e-15));
  // (0,0) to (1,1): separable |dx| + |dy|
  CHECK(c(0, 7) == doctest::Approx(std::exp(-40.0 / 408.0)).epsilon(1e-15));
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd flat = build_covariance(small_spec(6, 1e12, 2.0));
  CHECK((flat.array() - 2.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("covariance spec validation") {
  CHECK_THROWS_AS(build_covariance(small_spec(4, 0.0)), ValidationError);
  CHECK_THROWS_AS(build_covariance(small_spec(4, -3.0)), ValidationError);
  CHECK_THROWS_AS(build_covariance(small_spec(4, 408.0, -1.0)), ValidationError);
}

TEST_CASE("full decomposition reconstructs the covariance") {
  const CovarianceSpec s = small_spec(7);
  const Eigen::MatrixXd c = build_covariance(s);
  const KleBasis b = decompose(c, s, s.cells());
  const Eigen::MatrixXd rec = b.modes * b.eigenvalues.asDiagonal() * b.modes.transpose();
  CHECK((rec - c).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(decompose(c, s, s.cells() + 1), ValidationError);
}

TEST_CASE("basis invariants") {
  const CovarianceSpec s = small_spec(9);
  const Eigen::MatrixXd c = build_covariance(s);
  const KleBasis b = decompose(c, s, 30);
  CHECK(b.eigenvalues.minCoeff() >= -1e-10);
  CHECK(b.eigenvalues.sum() <= s.cells() * s.variance + 1e-6);
  for (int k = 1; k < b.terms(); ++k) CHECK(b.eigenvalues[k] <= b.eigenvalues[k - 1]);
  const Eigen::MatrixXd gram = b.modes.transpose() * b.modes;
  CHECK((gram - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff() <= 1e-8);

  double previous = INFINITY;
  for (int m : {1, 5, 10, 20, 30}) {
    const Eigen::MatrixXd part = b.modes.leftCols(m) * b.eigenvalues.head(m).asDiagonal() *
                                 b.modes.leftCols(m).transpose();
    const double err = (c - part).norm();
    CHECK(err <= previous + 1e-12);
    previous = err;
  }
}

TEST_CASE("zero variance gives zero spectrum") {
  const CovarianceSpec s = small_spec(5, 408.0, 0.0);
  const KleBasis b = build_basis(s, 5);
  CHECK(b.eigenvalues.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sampling: zero coefficients, single mode and linearity") {
  const CovarianceSpec s = small_spec(8);
  const KleBasis b = build_basis(s, 4);
  const std::vector<double> zero(4, 0.0);
  const ConductivityField f0 = sample_field(b, zero);
  CHECK((f0.k.array() == 1.0).all());

  KleBasis one = b;
  one.eigenvalues = b.eigenvalues.head(1);
  one.modes = b.modes.leftCols(1);
  const std::vector<double> xi1{1.0};
  const ConductivityField f1 = sample_field(one, xi1);
  CHECK((f1.log_k - std::sqrt(b.eigenvalues[0]) * b.modes.col(0)).cwiseAbs().maxCoeff() <= 1e-15);

  const std::vector<double> a{0.3, -1.0, 2.0, 0.5}, c{-0.7, 0.1, 0.4, 1.5};
  std::vector<double> sum(4);
  for (int k = 0; k < 4; ++k) sum[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] + c[static_cast<std::size_t>(k)];
  const Eigen::VectorXd lin = sample_field(b, a).log_k + sample_field(b, c).log_k - sample_field(b, sum).log_k;
  CHECK(lin.cwiseAbs().maxCoeff() <= 1e-13);

  CHECK_THROWS_AS(sample_field(b, std::vector<double>(3, 0.0)), ValidationError);
  const ConductivityField r = sample_field(b, std::uint64_t{42});
  CHECK((r.k.array() > 0.0).all());
  REQUIRE(r.seed.has_value());
  CHECK(*r.seed == 42);
  CHECK(sample_field(b, std::uint64_t{42}).k == r.k);
}

TEST_CASE("Monte-Carlo variance and mean of ln K") {
  const CovarianceSpec s = small_spec(12, 120.0);
  const KleBasis b = build_basis(s, 20);
  const Eigen::VectorXd model = b.pointwise_variance();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(s.cells()), sq = Eigen::VectorXd::Zero(s.cells());
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    const ConductivityField f = sample_field(b, static_cast<std::uint64_t>(1000 + k));
    sum += f.log_k;
    sq += f.log_k.cwiseProduct(f.log_k);
  }
  const Eigen::VectorXd mean = sum / n;
  const Eigen::VectorXd var = (sq - n * mean.cwiseProduct(mean)) / (n - 1);
  // domain-averaged variance within 10 %; single cells carry about 4.5 %
  // sampling error each, so the per-cell bound is looser
  CHECK(std::abs(var.mean() - model.mean()) / model.mean() <= 0.10);
  const double worst = ((var - model).array() / model.array()).abs().maxCoeff();
  CHECK(worst <= 0.25);
  // standard error of the mean is about sqrt(var / n)
  CHECK((mean.array().abs() / (model.array() / n).sqrt()).maxCoeff() <= 4.5);
}

TEST_CASE("field file round-trip") {
  const CovarianceSpec s = small_spec(5);
  const KleBasis b = build_basis(s, 3);
  const ConductivityField f = sample_field(b, std::uint64_t{7});
  const auto path = std::filesystem::temp_directory_path() / "tghcp_field_roundtrip.json";
  save_field(path.string(), f, s);
  const ConductivityField g = load_field(path.string());
  CHECK(g.nx == 5);
  CHECK(g.xi == f.xi);
  CHECK((g.k - f.k).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.seed == f.seed);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_field(path.string()), IoError);
}

TEST_CASE("retained energy agrees between full and half resolution" * doctest::timeout(120)) {
  CovarianceSpec full;  // 51 x 51, 1020 x 1020
  CovarianceSpec half = full;
  half.nx = 26;
  half.ny = 26;
  const KleBasis a = build_basis(full, 20);
  const KleBasis h = build_basis(half, 20);
  const double ra = a.eigenvalues.sum() / (full.cells() * full.variance);
  const double rh = h.eigenvalues.sum() / (half.cells() * half.variance);
  MESSAGE("retained energy 51x51: " << ra << ", 26x26: " << rh);
  CHECK(std::abs(ra - rh) / rh <= 0.05);
}
