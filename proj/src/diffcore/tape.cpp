#include "tghcp/diffcore/tape.hpp"

#include "tghcp/errors.hpp"

#include <string>
#include <utility>

namespace tghcp::diff {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Var Tape::push(Node node) {
  if (consumed_) throw UsageError("tape already consumed by backward(); build a new graph");
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::affine(Var weight, Var x, Var bias) {
  const Matrix& w = node(weight).value;
  const Matrix& in = node(x).value;
  const Matrix& b = node(bias).value;
  if (w.cols() != in.rows()) {
    throw ConfigError("affine: weight has " + std::to_string(w.cols()) + " columns but input has " +
                      std::to_string(in.rows()) + " rows");
  }
  if (b.rows() != w.rows() || b.cols() != 1) throw ConfigError("affine: bias shape mismatch");
  Node n;
  n.kind = OpKind::Affine;
  n.a = weight.id;
  n.b = x.id;
  n.c = bias.id;
  n.value.noalias() = w * in;
  n.value.colwise() += b.col(0);
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  Node n;
  n.kind = OpKind::Tanh;
  n.a = x.id;
  n.value = node(x).value.array().tanh().matrix();
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  require_same_shape(node(a).value, node(b).value, "add");
  Node n;
  n.kind = OpKind::Add;
  n.a = a.id;
  n.b = b.id;
  n.value = node(a).value + node(b).value;
  return push(std::move(n));
}

Var Tape::multiply(Var a, Var b) {
  require_same_shape(node(a).value, node(b).value, "multiply");
  Node n;
  n.kind = OpKind::Multiply;
  n.a = a.id;
  n.b = b.id;
  n.value = node(a).value.cwiseProduct(node(b).value);
  return push(std::move(n));
}

Var Tape::square(Var x) {
  Node n;
  n.kind = OpKind::Square;
  n.a = x.id;
  n.value = node(x).value.array().square().matrix();
  return push(std::move(n));
}

Var Tape::mean(Var x) {
  const Matrix& v = node(x).value;
  if (v.size() == 0) throw ConfigError("mean: empty operand");
  Node n;
  n.kind = OpKind::Mean;
  n.a = x.id;
  n.value = Matrix::Constant(1, 1, v.mean());
  return push(std::move(n));
}

Var Tape::scale(Var x, double factor) {
  Node n;
  n.kind = OpKind::Scale;
  n.a = x.id;
  n.factor = factor;
  n.value = node(x).value * factor;
  return push(std::move(n));
}

Var Tape::fixed_linear_map(Var x, const Matrix& map, const Vector& offset) {
  const Matrix& in = node(x).value;
  if (map.cols() != in.size()) {
    throw ConfigError("fixed_linear_map: map has " + std::to_string(map.cols()) +
                      " columns but input has " + std::to_string(in.size()) + " entries");
  }
  if (offset.size() != map.rows()) throw ConfigError("fixed_linear_map: offset length mismatch");
  auto lm = std::make_shared<LinearMap>();
  lm->dense = map;
  Node n;
  n.kind = OpKind::FixedLinearMap;
  n.a = x.id;
  Vector out = map * in.reshaped() + offset;
  n.value = out.transpose();
  n.map = std::move(lm);
  return push(std::move(n));
}

Var Tape::fixed_linear_map(Var x, SparseMatrix map, Vector offset) {
  const Matrix& in = node(x).value;
  if (map.cols() != in.size()) {
    throw ConfigError("fixed_linear_map: map has " + std::to_string(map.cols()) +
                      " columns but input has " + std::to_string(in.size()) + " entries");
  }
  if (offset.size() != map.rows()) throw ConfigError("fixed_linear_map: offset length mismatch");
  Node n;
  n.kind = OpKind::FixedLinearMap;
  n.a = x.id;
  Vector out = map * in.reshaped() + offset;
  n.value = out.transpose();
  auto lm = std::make_shared<LinearMap>();
  lm->sparse = true;
  lm->sparse_map = std::move(map);
  n.map = std::move(lm);
  return push(std::move(n));
}

void Tape::accumulate(std::size_t id, const Matrix& contribution) {
  Node& target = nodes_[id];
  if (target.kind == OpKind::Constant) return;
  if (target.adjoint.size() == 0) {
    target.adjoint = contribution;
  } else {
    target.adjoint += contribution;
  }
}

void Tape::backward(Var loss) {
  if (consumed_) throw UsageError("backward() called twice on the same graph");
  const Node& root = node(loss);
  if (root.value.size() != 1) throw UsageError("backward() requires a scalar loss");
  consumed_ = true;

  nodes_[loss.id].adjoint = Matrix::Ones(1, 1);
  for (std::size_t k = loss.id + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (n.adjoint.size() == 0) continue;
    const Matrix& g = n.adjoint;
    switch (n.kind) {
      case OpKind::Leaf:
      case OpKind::Constant:
        break;
      case OpKind::Affine: {
        const Matrix& w = nodes_[n.a].value;
        const Matrix& x = nodes_[n.b].value;
        if (nodes_[n.a].kind != OpKind::Constant) {
          Matrix dw = g * x.transpose();
          accumulate(n.a, dw);
        }
        if (nodes_[n.b].kind != OpKind::Constant) {
          Matrix dx = w.transpose() * g;
          accumulate(n.b, dx);
        }
        if (nodes_[n.c].kind != OpKind::Constant) {
          Matrix db = g.rowwise().sum();
          accumulate(n.c, db);
        }
        break;
      }
      case OpKind::Tanh: {
        Matrix dx = g.cwiseProduct((1.0 - n.value.array().square()).matrix());
        accumulate(n.a, dx);
        break;
      }
      case OpKind::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case OpKind::Multiply: {
        Matrix da = g.cwiseProduct(nodes_[n.b].value);
        Matrix db = g.cwiseProduct(nodes_[n.a].value);
        accumulate(n.a, da);
        accumulate(n.b, db);
        break;
      }
      case OpKind::Square: {
        Matrix dx = 2.0 * g.cwiseProduct(nodes_[n.a].value);
        accumulate(n.a, dx);
        break;
      }
      case OpKind::Mean: {
        const Matrix& x = nodes_[n.a].value;
        Matrix dx = Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size()));
        accumulate(n.a, dx);
        break;
      }
      case OpKind::Scale: {
        Matrix dx = g * n.factor;
        accumulate(n.a, dx);
        break;
      }
      case OpKind::FixedLinearMap: {
        const Matrix& x = nodes_[n.a].value;
        Vector back = n.map->sparse ? Vector(n.map->sparse_map.transpose() * g.reshaped())
                                    : Vector(n.map->dense.transpose() * g.reshaped());
        Matrix dx = back.reshaped(x.rows(), x.cols());
        accumulate(n.a, dx);
        break;
      }
    }
  }
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::adjoint(Var v) const {
  if (!consumed_) throw UsageError("adjoint requested before backward()");
  return node(v).adjoint;
}

double Tape::scalar(Var v) const {
  const Matrix& m = node(v).value;
  if (m.size() != 1) throw UsageError("scalar() on a non-scalar node");
  return m(0, 0);
}

}  // namespace tghcp::diff
