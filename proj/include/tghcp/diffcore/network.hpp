#pragma once

#include "tghcp/diffcore/tape.hpp"

#include <cstdint>
#include <vector>

namespace tghcp::diff {

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Weights and biases of a fully connected tanh network. The last layer is
/// linear. Gradients use the same type, so shapes mirror by construction.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<Layer> layers);

  /// Zero-initialized network with the given layer widths, e.g. {3, 50, 1}.
  static ParameterSet zeros(const std::vector<int>& widths);
  /// Xavier/Glorot uniform weights, zero biases.
  static ParameterSet xavier_uniform(const std::vector<int>& widths, std::uint64_t seed);

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::vector<int> widths() const;
  int input_size() const;
  int output_size() const;
  std::size_t parameter_count() const;

  /// Flat view in layer order, weight (column-major) then bias.
  std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);

  bool all_finite() const;
  bool same_shape(const ParameterSet& other) const;
  ParameterSet zeros_like() const;

 private:
  void validate() const;

  std::vector<Layer> layers_;
};

/// Parameter leaves of one network recorded on a tape.
struct BoundNetwork {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

BoundNetwork bind(Tape& tape, const ParameterSet& params);

/// Records the forward pass for a batch of inputs (input_size x batch).
/// Throws ConfigError on a shape mismatch and NumericError on non-finite
/// parameters.
Var forward(Tape& tape, const BoundNetwork& net, Var inputs);

/// Single-point forward: records the graph on `tape` and returns the scalar
/// output node.
Var forward(Tape& tape, const BoundNetwork& net, const Vector& input);

/// Gradients of the bound parameters after tape.backward().
ParameterSet gradients(const Tape& tape, const BoundNetwork& net, const ParameterSet& shape);

/// Graph-free batched evaluation for inference.
Matrix evaluate(const ParameterSet& params, const Matrix& inputs);
double evaluate(const ParameterSet& params, const Vector& input);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParameterSet& shape, AdamConfig config);
  void step(ParameterSet& params, const ParameterSet& grads);
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  ParameterSet m_;
  ParameterSet v_;
  long t_ = 0;
};

}  // namespace tghcp::diff
