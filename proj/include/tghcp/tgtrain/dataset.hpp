#pragma once

#include "tghcp/flowsim/grid.hpp"
#include "tghcp/hcp/constraint.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tghcp::train {

using hcp::CellIndex;

/// Labels throughout the dataset are in normalized head units.
struct Observation {
  CellIndex cell;
  double label = 0.0;
};

enum class BoundaryKind { Dirichlet, NoFlow };

/// Dirichlet samples carry a head label; no-flow samples carry the adjacent
/// interior cell and penalize the head difference across the edge face.
struct BoundarySample {
  CellIndex cell;
  BoundaryKind kind = BoundaryKind::Dirichlet;
  double label = 0.0;
  CellIndex inner;
};

struct InitialSample {
  CellIndex cell;  // t = 0
  double label = 0.0;
};

struct TrainingDataset {
  std::vector<Observation> observations;
  std::vector<CellIndex> collocation;
  std::vector<BoundarySample> boundary;
  std::vector<InitialSample> initial;
  int observation_horizon = 18;
  std::uint64_t seed = 0;

  /// Observations within steps 1..observation_horizon, collocation centres
  /// on the grid with t >= 1, initial samples at t = 0.
  void validate(const flow::GridSpec& grid) const;
};

struct CorruptionSpec {
  double noise_level = 0.0;       // fraction: 0.4 means 40 %
  double outlier_fraction = 0.0;  // p in [0, 1]
  std::uint64_t seed = 0;

  void validate() const;
};

/// Multiplicative Gaussian noise label * (1 + level * N(0,1)) on every
/// observation, then round(p * N) distinct labels replaced by U[1, 2].
/// Only observation labels change.
TrainingDataset corrupt(TrainingDataset dataset, const CorruptionSpec& spec);

void save_dataset(const std::string& path, const TrainingDataset& dataset);
TrainingDataset load_dataset(const std::string& path);

}  // namespace tghcp::train
