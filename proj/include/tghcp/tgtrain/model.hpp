#pragma once

#include "tghcp/diffcore/network.hpp"
#include "tghcp/flowsim/grid.hpp"
#include "tghcp/hcp/constraint.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace tghcp::train {

enum class Variant { Ann, Soft, Hcp };

const char* variant_name(Variant v);
/// Accepts "ann", "soft", "hcp" (case-insensitive).
Variant parse_variant(const std::string& name);

/// Maps the space-time domain to the unit cube and the head range to [0, 1].
struct Normalization {
  double length_x = 1.0;
  double length_y = 1.0;
  double duration = 1.0;
  double head_shift = 0.0;
  double head_scale = 1.0;

  static Normalization for_problem(const flow::GridSpec& grid, const flow::BoundarySpec& boundary);

  Eigen::Vector3d input(double x, double y, double time) const;
  Eigen::Vector3d input(const hcp::CellIndex& cell, const flow::GridSpec& grid) const;
  double normalize_head(double h) const { return (h - head_shift) / head_scale; }
  double denormalize_head(double u) const { return u * head_scale + head_shift; }
};

struct SurrogateModel {
  diff::ParameterSet params;
  Normalization norm;
  flow::GridSpec grid;
  Variant variant = Variant::Hcp;
  std::uint64_t seed = 0;  // initialization seed

  /// Network inputs (3 x n) for grid cells.
  Eigen::MatrixXd inputs(const std::vector<hcp::CellIndex>& cells) const;
  /// Normalized predictions at grid cells.
  Eigen::VectorXd predict_normalized(const std::vector<hcp::CellIndex>& cells) const;
};

/// Default architecture: 3 inputs, five hidden layers of 50 tanh units, 1 output.
std::vector<int> default_widths();
std::vector<int> widths_with_hidden(const std::vector<int>& hidden);

/// Denormalized heads at every cell centre for one time index, row-major
/// (j * nx + i); nx * ny network evaluations, no time marching.
std::vector<double> predict_field(const SurrogateModel& model, int time_index);
flow::HeadField predict_all(const SurrogateModel& model);

/// Self-describing JSON checkpoint: widths, flat parameters, normalization,
/// grid and variant.
void save_checkpoint(const std::string& path, const SurrogateModel& model);
SurrogateModel load_checkpoint(const std::string& path);

}  // namespace tghcp::train
