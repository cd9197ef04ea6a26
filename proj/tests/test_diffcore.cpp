#include "support.hpp"

#include "tghcp/diffcore/linalg.hpp"
#include "tghcp/diffcore/network.hpp"
#include "tghcp/diffcore/tape.hpp"
#include "tghcp/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tghcp;
using namespace tghcp::diff;
using testing_support::random_matrix;
using testing_support::rel_err;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

double batch_loss(const ParameterSet& p, const Matrix& x, const Matrix& y) {
  const Matrix out = evaluate(p, x);
  return (out - y).array().square().mean();
}

}  // namespace

TEST_CASE("square and tanh derivatives") {
  Tape t;
  const Var x = t.leaf(scalar(3.0));
  const Var loss = t.mean(t.square(x));
  t.backward(loss);
  CHECK(t.scalar(loss) == doctest::Approx(9.0));
  CHECK(t.adjoint(x)(0, 0) == doctest::Approx(6.0));

  Tape t2;
  const Var z = t2.leaf(scalar(0.0));
  const Var th = t2.mean(t2.tanh(z));
  t2.backward(th);
  CHECK(t2.scalar(th) == 0.0);
  CHECK(t2.adjoint(z)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("backward is single use and needs a scalar") {
  Tape t;
  const Var x = t.leaf(scalar(2.0));
  const Var l = t.mean(t.square(x));
  t.backward(l);
  CHECK_THROWS_AS(t.backward(l), UsageError);
  CHECK_THROWS_AS(t.square(x), UsageError);

  Tape v;
  const Var m = v.leaf(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(v.backward(m), UsageError);
  Tape w;
  const Var k = w.leaf(scalar(1.0));
  CHECK_THROWS_AS(w.adjoint(k), UsageError);
}

TEST_CASE("add, multiply and scale gradients") {
  Tape t;
  const Var a = t.leaf(scalar(1.5));
  const Var b = t.leaf(scalar(-2.0));
  const Var l = t.mean(t.scale(t.add(t.multiply(a, b), a), 3.0));
  t.backward(l);
  CHECK(t.scalar(l) == doctest::Approx(3.0 * (1.5 * -2.0 + 1.5)));
  CHECK(t.adjoint(a)(0, 0) == doctest::Approx(3.0 * (-2.0 + 1.0)));
  CHECK(t.adjoint(b)(0, 0) == doctest::Approx(3.0 * 1.5));
}

TEST_CASE("zero-weight network returns its final bias") {
  ParameterSet p = ParameterSet::zeros({3, 4, 4, 1});
  p.layers().back().bias[0] = 0.37;
  Tape t;
  const BoundNetwork net = bind(t, p);
  const Var out = forward(t, net, Vector::Constant(3, 0.8));
  CHECK(t.scalar(out) == 0.37);
  CHECK(evaluate(p, Vector(Vector::Constant(3, -5.0))) == 0.37);
}

TEST_CASE("single tanh layer with zero parameters gives zero") {
  ParameterSet p = ParameterSet::zeros({3, 1});
  Tape t;
  const Var out = forward(t, bind(t, p), Vector::Constant(3, 12.0));
  CHECK(t.scalar(out) == 0.0);
}

TEST_CASE("forward pass matches hand-ordered arithmetic") {
  const ParameterSet p = ParameterSet::xavier_uniform({3, 50, 1}, 11);
  const auto& l0 = p.layers()[0];
  const auto& l1 = p.layers()[1];
  const double x[3] = {0.5, 0.5, 0.5};
  double out = l1.bias[0];
  for (int h = 0; h < 50; ++h) {
    double z = l0.bias[h];
    for (int k = 0; k < 3; ++k) z += l0.weight(h, k) * x[k];
    out += l1.weight(0, h) * std::tanh(z);
  }
  Tape t;
  const Var y = forward(t, bind(t, p), Vector::Constant(3, 0.5));
  CHECK(std::abs(t.scalar(y) - out) <= 1e-14);
}

TEST_CASE("forward rejects bad shapes and non-finite parameters") {
  ParameterSet p = ParameterSet::xavier_uniform({3, 5, 1}, 1);
  Tape t;
  const BoundNetwork net = bind(t, p);
  CHECK_THROWS_AS(forward(t, net, Vector::Zero(2)), ConfigError);
  p.layers()[0].weight(0, 0) = std::nan("");
  Tape t2;
  CHECK_THROWS_AS(bind(t2, p), NumericError);
}

TEST_CASE("parameter gradients match central differences") {
  std::mt19937_64 rng(2024);
  const std::vector<std::vector<int>> shapes{{3, 8, 8, 1}, {3, 5, 1}, {3, 10, 6, 4, 1}, {2, 7, 3}};
  for (int trial = 0; trial < 8; ++trial) {
    const auto& widths = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    ParameterSet p = ParameterSet::xavier_uniform(widths, 100 + trial);
    const Matrix x = random_matrix(widths.front(), 5, rng);
    const Matrix y = random_matrix(widths.back(), 5, rng);

    Tape t;
    const BoundNetwork net = bind(t, p);
    const Var out = forward(t, net, t.constant(x));
    const Var diffv = t.add(out, t.constant(-y));
    const Var loss = t.mean(t.square(diffv));
    t.backward(loss);
    const std::vector<double> g = gradients(t, net, p).flatten();

    std::vector<double> flat = p.flatten();
    for (std::size_t k = 0; k < flat.size(); ++k) {
      const double keep = flat[k];
      flat[k] = keep + 1e-5;
      p.assign(flat);
      const double up = batch_loss(p, x, y);
      flat[k] = keep - 1e-5;
      p.assign(flat);
      const double down = batch_loss(p, x, y);
      flat[k] = keep;
      p.assign(flat);
      const double fd = (up - down) / 2e-5;
      if (std::abs(fd) < 1e-8 && std::abs(g[k]) < 1e-8) continue;
      CHECK(rel_err(g[k], fd) <= 1e-5);
    }
  }
}

TEST_CASE("fixed linear map: identity, constant and column sums") {
  std::mt19937_64 rng(5);
  const Matrix in = random_matrix(1, 6, rng);

  Tape t;
  const Var x = t.leaf(in);
  const Var y = t.fixed_linear_map(x, Matrix(Matrix::Identity(6, 6)), Vector::Zero(6));
  CHECK((t.value(y) - in).norm() == 0.0);
  const Var l = t.mean(t.multiply(y, t.constant(Matrix::Ones(1, 6))));
  t.backward(l);
  CHECK((t.adjoint(x) - Matrix::Constant(1, 6, 1.0 / 6.0)).norm() <= 1e-15);

  Tape t2;
  const Var x2 = t2.leaf(in);
  const Var y2 = t2.fixed_linear_map(x2, Matrix(Matrix::Zero(6, 6)), Vector::Constant(6, 4.0));
  CHECK((t2.value(y2).array() == 4.0).all());
  t2.backward(t2.mean(t2.square(y2)));
  CHECK(t2.adjoint(x2).norm() == 0.0);

  const Matrix m = random_matrix(6, 6, rng);
  Tape t3;
  const Var x3 = t3.leaf(in);
  const Var y3 = t3.fixed_linear_map(x3, m, Vector::Zero(6));
  // mean * 6 == sum of outputs
  t3.backward(t3.scale(t3.mean(y3), 6.0));
  const Eigen::RowVectorXd colsum = m.colwise().sum();
  CHECK((t3.adjoint(x3) - colsum).cwiseAbs().maxCoeff() <= 1e-12);

  Tape t4;
  const Var x4 = t4.leaf(in);
  CHECK_THROWS_AS(t4.fixed_linear_map(x4, Matrix(Matrix::Identity(5, 5)), Vector::Zero(5)), ConfigError);
}

TEST_CASE("fixed linear map is linear and sparse form agrees with dense") {
  std::mt19937_64 rng(9);
  const Matrix m = random_matrix(4, 6, rng);
  const Matrix u = random_matrix(1, 6, rng);
  const Matrix v = random_matrix(1, 6, rng);
  const double a = 0.7, b = -1.3;
  Tape t;
  const Matrix fu = t.value(t.fixed_linear_map(t.constant(u), m, Vector::Zero(4)));
  const Matrix fv = t.value(t.fixed_linear_map(t.constant(v), m, Vector::Zero(4)));
  const Matrix fuv = t.value(t.fixed_linear_map(t.constant(a * u + b * v), m, Vector::Zero(4)));
  CHECK((fuv - (a * fu + b * fv)).cwiseAbs().maxCoeff() <= 1e-14);

  SparseMatrix sm = m.sparseView();
  const Vector c = Vector::LinSpaced(4, 1.0, 2.0);
  const Matrix dense = t.value(t.fixed_linear_map(t.constant(u), m, c));
  const Matrix sparse = t.value(t.fixed_linear_map(t.constant(u), std::move(sm), c));
  CHECK((dense - sparse).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("Adam moves against the gradient") {
  ParameterSet p = ParameterSet::zeros({1, 1});
  ParameterSet g = p.zeros_like();
  g.layers()[0].weight(0, 0) = 2.0;
  g.layers()[0].bias[0] = -1.0;
  Adam opt(p, AdamConfig{});
  opt.step(p, g);
  CHECK(p.layers()[0].weight(0, 0) == doctest::Approx(-1e-3));
  CHECK(p.layers()[0].bias[0] == doctest::Approx(1e-3));
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("flatten and assign round-trip") {
  ParameterSet p = ParameterSet::xavier_uniform({3, 4, 2}, 3);
  const std::vector<double> f = p.flatten();
  CHECK(f.size() == p.parameter_count());
  CHECK(p.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
  ParameterSet q = p.zeros_like();
  q.assign(f);
  CHECK(q.flatten() == f);
  CHECK_THROWS(q.assign(std::vector<double>(3, 0.0)));
}

TEST_CASE("eigendecomposition: identity and 2x2 closed form") {
  const SymmetricEigen id = symmetric_eigendecomposition(Eigen::MatrixXd::Identity(5, 5));
  CHECK((id.values.array() - 1.0).abs().maxCoeff() <= 1e-14);

  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  const SymmetricEigen e = symmetric_eigendecomposition(s);
  CHECK(e.values[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("eigendecomposition reconstructs a random symmetric matrix") {
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd r = random_matrix(10, 10, rng);
  const Eigen::MatrixXd s = 0.5 * (r + r.transpose());
  const SymmetricEigen e = symmetric_eigendecomposition(s);
  const Eigen::MatrixXd rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  CHECK((rec - s).cwiseAbs().maxCoeff() <= 1e-10);
  for (int k = 1; k < 10; ++k) CHECK(e.values[k] <= e.values[k - 1]);
  CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-10);
  for (int k = 0; k < 10; ++k) {
    CHECK((s * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm() <= 1e-8 * s.norm());
  }

  const SymmetricEigen top = symmetric_eigendecomposition(s, 3);
  REQUIRE(top.values.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(top.values[k] == doctest::Approx(e.values[k]).epsilon(1e-12));
}

TEST_CASE("eigendecomposition rejects asymmetric input") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(0, 1) = 1e-6;
  CHECK_THROWS_AS(symmetric_eigendecomposition(s), ValidationError);
  CHECK_THROWS_AS(symmetric_eigendecomposition(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}
