#include "tghcp/diffcore/network.hpp"

#include "tghcp/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tghcp::diff {

ParameterSet::ParameterSet(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

void ParameterSet::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows()) {
      throw ConfigError("layer " + std::to_string(l) + ": bias length does not match weight rows");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw ConfigError("layer " + std::to_string(l) + ": input width does not match previous layer");
    }
  }
}

ParameterSet ParameterSet::zeros(const std::vector<int>& widths) {
  if (widths.size() < 2) throw ConfigError("network needs at least an input and an output width");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] <= 0 || widths[l + 1] <= 0) throw ConfigError("layer widths must be positive");
    layers.push_back({Matrix::Zero(widths[l + 1], widths[l]), Vector::Zero(widths[l + 1])});
  }
  return ParameterSet(std::move(layers));
}

ParameterSet ParameterSet::xavier_uniform(const std::vector<int>& widths, std::uint64_t seed) {
  ParameterSet p = zeros(widths);
  std::mt19937_64 rng(seed);
  for (Layer& layer : p.layers_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double fan_out = static_cast<double>(layer.weight.rows());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
  }
  return p;
}

std::vector<int> ParameterSet::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(static_cast<int>(layers_.front().weight.cols()));
  for (const Layer& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

int ParameterSet::input_size() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int ParameterSet::output_size() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> ParameterSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Layer& l : layers_) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

void ParameterSet::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) {
    throw ConfigError("parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                      std::to_string(parameter_count()));
  }
  std::size_t k = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = flat[k++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[k++];
  }
}

bool ParameterSet::all_finite() const {
  for (const Layer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool ParameterSet::same_shape(const ParameterSet& other) const { return widths() == other.widths(); }

ParameterSet ParameterSet::zeros_like() const { return zeros(widths()); }

BoundNetwork bind(Tape& tape, const ParameterSet& params) {
  if (!params.all_finite()) throw NumericError("network parameters contain non-finite values");
  BoundNetwork net;
  for (const Layer& l : params.layers()) {
    net.weights.push_back(tape.leaf(l.weight));
    net.biases.push_back(tape.leaf(l.bias));
  }
  return net;
}

Var forward(Tape& tape, const BoundNetwork& net, Var inputs) {
  if (net.weights.empty()) throw ConfigError("empty network");
  const Matrix& w0 = tape.value(net.weights.front());
  if (tape.value(inputs).rows() != w0.cols()) {
    throw ConfigError("input dimension " + std::to_string(tape.value(inputs).rows()) +
                      " does not match first layer width " + std::to_string(w0.cols()));
  }
  Var h = inputs;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    h = tape.affine(net.weights[l], h, net.biases[l]);
    if (l != last) h = tape.tanh(h);
  }
  return h;
}

Var forward(Tape& tape, const BoundNetwork& net, const Vector& input) {
  Var in = tape.constant(Matrix(input));
  Var out = forward(tape, net, in);
  if (tape.value(out).size() != 1) throw ConfigError("single-point forward expects a scalar output");
  return out;
}

ParameterSet gradients(const Tape& tape, const BoundNetwork& net, const ParameterSet& shape) {
  ParameterSet g = shape.zeros_like();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Matrix& dw = tape.adjoint(net.weights[l]);
    const Matrix& db = tape.adjoint(net.biases[l]);
    if (dw.size() != 0) g.layers()[l].weight = dw;
    if (db.size() != 0) g.layers()[l].bias = db.col(0);
  }
  return g;
}

Matrix evaluate(const ParameterSet& params, const Matrix& inputs) {
  if (!params.all_finite()) throw NumericError("network parameters contain non-finite values");
  if (inputs.rows() != params.input_size()) {
    throw ConfigError("input dimension " + std::to_string(inputs.rows()) +
                      " does not match first layer width " + std::to_string(params.input_size()));
  }
  const auto& layers = params.layers();
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = layers[l].weight * h;
    z.colwise() += layers[l].bias;
    if (l + 1 != layers.size()) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return h;
}

double evaluate(const ParameterSet& params, const Vector& input) {
  Matrix out = evaluate(params, Matrix(input));
  if (out.size() != 1) throw ConfigError("single-point evaluate expects a scalar output");
  return out(0, 0);
}

Adam::Adam(const ParameterSet& shape, AdamConfig config)
    : config_(config), m_(shape.zeros_like()), v_(shape.zeros_like()) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
  if (!params.same_shape(m_) || !grads.same_shape(m_)) throw ConfigError("Adam: parameter shape changed");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.array() -= config_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  };
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    update(params.layers()[l].weight, grads.layers()[l].weight, m_.layers()[l].weight, v_.layers()[l].weight);
    update(params.layers()[l].bias, grads.layers()[l].bias, m_.layers()[l].bias, v_.layers()[l].bias);
  }
}

}  // namespace tghcp::diff
