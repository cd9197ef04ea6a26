#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <memory>
#include <vector>

namespace tghcp::diff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class OpKind {
  Leaf,
  Constant,
  Affine,
  Tanh,
  Add,
  Multiply,
  Square,
  Mean,
  Scale,
  FixedLinearMap,
};

/// Reverse-mode recording of matrix-valued operations.
///
/// Values are dense matrices laid out as (features x batch). Nodes are
/// appended in evaluation order, so the tape order is already a topological
/// order and the reverse pass is a single backwards sweep. A tape supports
/// exactly one reverse pass; build a fresh tape for every training step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Differentiable input (parameters, or coordinates in gradient checks).
  Var leaf(Matrix value);
  /// Input that never receives an adjoint.
  Var constant(Matrix value);

  /// weight (out x in) * x (in x batch) + bias (out x 1) broadcast over batch.
  Var affine(Var weight, Var x, Var bias);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var multiply(Var a, Var b);
  Var square(Var x);
  /// Mean over all entries; result is 1x1.
  Var mean(Var x);
  Var scale(Var x, double factor);

  /// output = M * vec(x) + c, returned as a 1 x rows(M) row. The map is a
  /// constant: M and c never receive gradients; x receives M^T * adjoint.
  Var fixed_linear_map(Var x, const Matrix& map, const Vector& offset);
  Var fixed_linear_map(Var x, SparseMatrix map, Vector offset);

  void backward(Var loss);

  const Matrix& value(Var v) const;
  /// Adjoint after backward(); zero-sized if the node was never reached.
  const Matrix& adjoint(Var v) const;
  double scalar(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct LinearMap {
    bool sparse = false;
    Matrix dense;
    SparseMatrix sparse_map;
  };

  struct Node {
    OpKind kind = OpKind::Leaf;
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    double factor = 1.0;
    std::shared_ptr<const LinearMap> map;
    Matrix value;
    Matrix adjoint;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void accumulate(std::size_t id, const Matrix& contribution);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace tghcp::diff
