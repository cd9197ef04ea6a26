#pragma once

#include "tghcp/tgtrain/losses.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tghcp::train {

struct TrainConfig {
  Variant variant = Variant::Hcp;
  /// Small IC weight: the t = 0 step is hard to fit, and t = 1 patches
  /// already fold in the initial heads.
  LossWeights weights{1.0, 0.1, 1.0, 0.01};
  diff::AdamConfig adam;
  int batch_size = 200;
  int epochs = 2000;
  std::uint64_t seed = 0;
  std::vector<int> hidden{50, 50, 50, 50, 50};
};

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  double data = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double ic = 0.0;
  double projection_change = 0.0;
};

/// Per-epoch means over the epoch's mini-batches.
struct LossHistory {
  std::vector<EpochRecord> records;

  std::size_t size() const { return records.size(); }
  /// CSV: epoch,L,MSE_DATA,MSE_PDE,MSE_BC,MSE_IC,projection_change
  void save_csv(const std::string& path) const;
  std::string to_csv() const;
};

struct TrainResult {
  SurrogateModel model;
  LossHistory history;
};

/// Optional per-epoch hook (progress logging).
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training. Every epoch shuffles each sample set and splits
/// it into ceil(max set size / batch_size) chunks; chunk k of every set forms
/// step k. HCP reads observation and no-flow boundary samples through their
/// patches' projected centres and penalizes raw stencil residuals at the
/// collocation patches; SOFT uses the same terms without projection; ANN
/// uses the observation term only. Throws NumericError with the epoch and
/// component breakdown if the loss becomes non-finite.
TrainResult train(const TrainingDataset& dataset, const ConstraintContext& ctx, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Fresh model with the configured architecture, initialized from the seed.
SurrogateModel initial_model(const ConstraintContext& ctx, const TrainConfig& config);

}  // namespace tghcp::train
