#include "tghcp/tgtrain/trainer.hpp"

#include "tghcp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace tghcp::train {

namespace {

// splitmix64 finalizer; decorrelates the streams derived from one seed.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
std::vector<std::size_t> shuffled(const std::vector<T>& items, std::mt19937_64& rng) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::pair<std::size_t, std::size_t> chunk(std::size_t n, std::size_t parts, std::size_t k) {
  return {n * k / parts, n * (k + 1) / parts};
}

std::string breakdown(int epoch, const LossComponents& c) {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << " (data=" << c.data << ", pde=" << c.pde << ", bc=" << c.bc
     << ", ic=" << c.ic << ")";
  return os.str();
}

}  // namespace

void LossHistory::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_csv();
}

std::string LossHistory::to_csv() const {
  std::ostringstream os;
  os << "epoch,L,MSE_DATA,MSE_PDE,MSE_BC,MSE_IC,projection_change\n";
  os << std::setprecision(17);
  for (const EpochRecord& r : records) {
    os << r.epoch << ',' << r.total << ',' << r.data << ',' << r.pde << ',' << r.bc << ',' << r.ic << ','
       << r.projection_change << '\n';
  }
  return os.str();
}

SurrogateModel initial_model(const ConstraintContext& ctx, const TrainConfig& config) {
  SurrogateModel m;
  m.params = diff::ParameterSet::xavier_uniform(widths_with_hidden(config.hidden), mix(config.seed));
  m.norm = ctx.norm;
  m.grid = ctx.grid;
  m.variant = config.variant;
  m.seed = config.seed;
  return m;
}

TrainResult train(const TrainingDataset& dataset, const ConstraintContext& ctx, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (config.epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (config.batch_size < 1) throw ConfigError("batch size must be positive");
  dataset.validate(ctx.grid);
  const Variant variant = config.variant;
  const LossWeights weights = effective_weights(config.weights, variant);
  if (variant != Variant::Ann && weights.pde > 0.0 && dataset.collocation.empty()) {
    throw ConfigError("physics-guided variants need collocation patches when the PDE weight is positive");
  }

  TrainResult result;
  result.model = initial_model(ctx, config);
  if (config.epochs == 0) return result;

  const bool uses_physics = variant != Variant::Ann;
  const bool projects = variant == Variant::Hcp;

  // Patch equations depend only on the field, so build them once per run.
  std::vector<PreparedPatch> collocation;
  if (uses_physics) {
    collocation.reserve(dataset.collocation.size());
    for (const CellIndex& c : dataset.collocation) collocation.push_back(prepare_patch(ctx, c));
  }
  std::vector<std::optional<PreparedPatch>> obs_patches;
  std::vector<std::optional<PreparedPatch>> bc_patches;
  if (projects) {
    for (const Observation& o : dataset.observations) obs_patches.push_back(try_prepare_patch(ctx, o.cell));
    for (const BoundarySample& b : dataset.boundary) {
      bc_patches.push_back(b.kind == BoundaryKind::NoFlow ? try_prepare_patch(ctx, b.cell) : std::nullopt);
    }
  }

  const std::size_t largest = std::max({dataset.observations.size(), dataset.collocation.size(),
                                        dataset.boundary.size(), dataset.initial.size(), std::size_t{1}});
  const std::size_t steps_per_epoch = (largest + static_cast<std::size_t>(config.batch_size) - 1) /
                                      static_cast<std::size_t>(config.batch_size);

  diff::Adam adam(result.model.params, config.adam);
  std::mt19937_64 rng(mix(config.seed ^ 0x5bd1e995ULL));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto obs_order = shuffled(dataset.observations, rng);
    const auto col_order = shuffled(dataset.collocation, rng);
    const auto bc_order = shuffled(dataset.boundary, rng);
    const auto ic_order = shuffled(dataset.initial, rng);

    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      LossGraph graph(ctx);

      std::vector<Observation> obs;
      std::vector<const PreparedPatch*> obs_p;
      const auto [o0, o1] = chunk(obs_order.size(), steps_per_epoch, step);
      for (std::size_t k = o0; k < o1; ++k) {
        obs.push_back(dataset.observations[obs_order[k]]);
        if (projects) obs_p.push_back(obs_patches[obs_order[k]] ? &*obs_patches[obs_order[k]] : nullptr);
      }
      graph.add_observations(obs, obs_p);

      if (uses_physics) {
        std::vector<const PreparedPatch*> col;
        const auto [c0, c1] = chunk(col_order.size(), steps_per_epoch, step);
        for (std::size_t k = c0; k < c1; ++k) col.push_back(&collocation[col_order[k]]);
        graph.add_collocation(col);

        std::vector<BoundarySample> bc;
        std::vector<const PreparedPatch*> bc_p;
        const auto [b0, b1] = chunk(bc_order.size(), steps_per_epoch, step);
        for (std::size_t k = b0; k < b1; ++k) {
          bc.push_back(dataset.boundary[bc_order[k]]);
          if (projects) bc_p.push_back(bc_patches[bc_order[k]] ? &*bc_patches[bc_order[k]] : nullptr);
        }
        graph.add_boundary(bc, bc_p);

        std::vector<InitialSample> ic;
        const auto [i0, i1] = chunk(ic_order.size(), steps_per_epoch, step);
        for (std::size_t k = i0; k < i1; ++k) ic.push_back(dataset.initial[ic_order[k]]);
        graph.add_initial(ic);
      }

      diff::Tape tape;
      const diff::BoundNetwork net = diff::bind(tape, result.model.params);
      const LossGraph::Result r = graph.build(tape, net, weights);
      if (!std::isfinite(r.total_value)) throw NumericError(breakdown(epoch, r.components));

      rec.total += r.total_value;
      rec.data += r.components.data;
      rec.pde += r.components.pde;
      rec.bc += r.components.bc;
      rec.ic += r.components.ic;
      rec.projection_change += r.projection_change;

      if (tape.size() > 0 && tape.value(r.total).size() == 1 && graph.point_count() > 0) {
        tape.backward(r.total);
        const diff::ParameterSet grads = diff::gradients(tape, net, result.model.params);
        adam.step(result.model.params, grads);
      }
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.total *= inv;
    rec.data *= inv;
    rec.pde *= inv;
    rec.bc *= inv;
    rec.ic *= inv;
    rec.projection_change *= inv;
    result.history.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace tghcp::train
