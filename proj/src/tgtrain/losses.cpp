#include "tghcp/tgtrain/losses.hpp"

#include "tghcp/errors.hpp"

#include <cmath>

namespace tghcp::train {

ConstraintContext make_context(const randfield::ConductivityField& k, const flow::GridSpec& grid,
                               const flow::BoundarySpec& boundary) {
  ConstraintContext ctx;
  ctx.conductivity = &k;
  ctx.grid = grid;
  ctx.boundary = boundary;
  ctx.norm = Normalization::for_problem(grid, boundary);
  ctx.pde_scale = 1.0 / grid.storage_coefficient();
  return ctx;
}

PreparedPatch prepare_patch(const ConstraintContext& ctx, const CellIndex& center) {
  if (ctx.conductivity == nullptr) throw UsageError("constraint context has no conductivity field");
  PreparedPatch p;
  p.system = hcp::rescale_values(hcp::build_patch_system(center, *ctx.conductivity, ctx.grid, ctx.boundary),
                                 ctx.norm.head_shift, ctx.norm.head_scale);
  p.projection = hcp::build_projection(p.system);
  hcp::StencilPatch geometry;
  geometry.center = center;
  for (int slot : p.system.unknown_slots) p.unknown_cells.push_back(geometry.cell(static_cast<hcp::Slot>(slot)));
  p.center = p.projection.position(hcp::Slot::Center);
  return p;
}

std::optional<PreparedPatch> try_prepare_patch(const ConstraintContext& ctx, const CellIndex& center) {
  if (center.t < 1 || center.t > ctx.grid.nt) return std::nullopt;
  if (!ctx.grid.contains(center.i, center.j) || ctx.boundary.pinned(ctx.grid, center.i, center.j)) return std::nullopt;
  return prepare_patch(ctx, center);
}

void LossWeights::validate() const {
  if (!(data >= 0.0) || !(pde >= 0.0) || !(bc >= 0.0) || !(ic >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (data + pde + bc + ic <= 0.0) throw ConfigError("at least one loss weight must be positive");
}

LossWeights effective_weights(const LossWeights& w, Variant v) {
  w.validate();
  LossWeights e = w;
  if (v == Variant::Ann) {
    e.pde = 0.0;
    e.bc = 0.0;
    e.ic = 0.0;
    if (e.data <= 0.0) throw ConfigError("data-only model needs a positive data weight");
  }
  return e;
}

double total_loss(const LossWeights& weights, const LossComponents& c, Variant variant) {
  const LossWeights w = effective_weights(weights, variant);
  for (double v : {c.data, c.pde, c.bc, c.ic}) {
    if (!std::isfinite(v)) throw NumericError("non-finite loss component");
  }
  return w.data * c.data + w.pde * c.pde + w.bc * c.bc + w.ic * c.ic;
}

int LossGraph::column(const CellIndex& c) {
  const long long key = (static_cast<long long>(c.t) * 100003LL + c.j) * 100003LL + c.i;
  auto [it, inserted] = column_of_.try_emplace(key, static_cast<int>(points_.size()));
  if (inserted) points_.push_back(c);
  return it->second;
}

void LossGraph::add_value(Term& term, const CellIndex& cell, const PreparedPatch* patch, double coefficient) {
  const int row = static_cast<int>(term.rows);
  if (patch == nullptr) {
    term.entries.emplace_back(row, column(cell), coefficient);
    return;
  }
  const int c = patch->center;
  const auto& op = patch->projection;
  for (int k = 0; k < op.size(); ++k) {
    const double w = op.matrix(c, k);
    if (w != 0.0) term.entries.emplace_back(row, column(patch->unknown_cells[static_cast<std::size_t>(k)]), coefficient * w);
  }
  if (term.offsets.size() <= term.rows) term.offsets.resize(term.rows + 1, 0.0);
  term.offsets[term.rows] += coefficient * op.offset[c];
}

void LossGraph::finish_row(Term& term, double offset) {
  if (term.offsets.size() <= term.rows) term.offsets.resize(term.rows + 1, 0.0);
  term.offsets[term.rows] += offset;
  ++term.rows;
}

void LossGraph::add_observations(std::span<const Observation> obs, std::span<const PreparedPatch* const> patches) {
  if (!patches.empty() && patches.size() != obs.size()) throw UsageError("one patch slot per observation expected");
  for (std::size_t k = 0; k < obs.size(); ++k) {
    add_value(data_, obs[k].cell, patches.empty() ? nullptr : patches[k], 1.0);
    finish_row(data_, -obs[k].label);
  }
}

void LossGraph::add_collocation(std::span<const PreparedPatch* const> patches) {
  const double s = ctx_->pde_scale;
  for (const PreparedPatch* p : patches) {
    if (p == nullptr) throw UsageError("collocation entry without a patch");
    const int row = static_cast<int>(pde_.rows);
    std::vector<int> cols;
    for (std::size_t k = 0; k < p->unknown_cells.size(); ++k) {
      const int col = column(p->unknown_cells[k]);
      cols.push_back(col);
      pde_.entries.emplace_back(row, col, s * p->system.reduced[static_cast<Eigen::Index>(k)]);
    }
    finish_row(pde_, -s * p->system.rhs);
    collocation_columns_.emplace_back(p, std::move(cols));
  }
}

void LossGraph::add_boundary(std::span<const BoundarySample> samples, std::span<const PreparedPatch* const> patches) {
  if (!patches.empty() && patches.size() != samples.size()) throw UsageError("one patch slot per boundary sample expected");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const BoundarySample& b = samples[k];
    const PreparedPatch* patch = patches.empty() ? nullptr : patches[k];
    add_value(bc_, b.cell, patch, 1.0);
    if (b.kind == BoundaryKind::Dirichlet) {
      finish_row(bc_, -b.label);
    } else {
      add_value(bc_, b.inner, nullptr, -1.0);
      finish_row(bc_, 0.0);
    }
  }
}

void LossGraph::add_initial(std::span<const InitialSample> samples) {
  for (const InitialSample& s : samples) {
    add_value(ic_, s.cell, nullptr, 1.0);
    finish_row(ic_, -s.label);
  }
}

LossGraph::Result LossGraph::build(diff::Tape& tape, const diff::BoundNetwork& net, const LossWeights& weights) const {
  Result result;
  const Eigen::Index n = static_cast<Eigen::Index>(points_.size());
  if (n == 0) {
    result.total = tape.constant(diff::Matrix::Zero(1, 1));
    return result;
  }
  diff::Matrix x(3, n);
  for (Eigen::Index c = 0; c < n; ++c) x.col(c) = ctx_->norm.input(points_[static_cast<std::size_t>(c)], ctx_->grid);
  const diff::Var out = diff::forward(tape, net, tape.constant(std::move(x)));

  std::optional<diff::Var> total;
  auto add_term = [&](const Term& term, double weight, double& component) {
    if (term.rows == 0) return;
    diff::SparseMatrix map(static_cast<Eigen::Index>(term.rows), n);
    map.setFromTriplets(term.entries.begin(), term.entries.end());
    diff::Vector offset = Eigen::Map<const diff::Vector>(term.offsets.data(), static_cast<Eigen::Index>(term.rows));
    const diff::Var residual = tape.fixed_linear_map(out, std::move(map), std::move(offset));
    const diff::Var mse = tape.mean(tape.square(residual));
    component = tape.scalar(mse);
    if (weight == 0.0) return;
    const diff::Var weighted = tape.scale(mse, weight);
    total = total ? tape.add(*total, weighted) : weighted;
  };
  add_term(data_, weights.data, result.components.data);
  add_term(pde_, weights.pde, result.components.pde);
  add_term(bc_, weights.bc, result.components.bc);
  add_term(ic_, weights.ic, result.components.ic);
  result.total = total ? *total : tape.constant(diff::Matrix::Zero(1, 1));
  result.total_value = tape.scalar(result.total);

  if (!collocation_columns_.empty()) {
    const diff::Matrix& u = tape.value(out);
    const Normalization& nm = ctx_->norm;
    double sum = 0.0;
    for (const auto& [patch, cols] : collocation_columns_) {
      Eigen::VectorXd h(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) h[static_cast<Eigen::Index>(k)] = u(0, cols[k]);
      const Eigen::VectorXd moved = hcp::project(patch->projection, h) - h;
      const Eigen::VectorXd heads = (h.array() * nm.head_scale + nm.head_shift).matrix();
      const double denom = heads.norm();
      if (denom > 0.0) sum += nm.head_scale * moved.norm() / denom;
    }
    result.projection_change = sum / static_cast<double>(collocation_columns_.size());
  }
  return result;
}

double observation_loss(const SurrogateModel& model, std::span<const Observation> obs, const ConstraintContext* ctx,
                        bool* empty) {
  if (empty) *empty = obs.empty();
  if (obs.empty()) return 0.0;
  ConstraintContext raw;
  if (ctx == nullptr) {
    raw.grid = model.grid;
    raw.norm = model.norm;
  }
  const ConstraintContext& use = ctx ? *ctx : raw;
  std::vector<std::optional<PreparedPatch>> owned;
  std::vector<const PreparedPatch*> patches;
  if (ctx) {
    owned.reserve(obs.size());
    for (const Observation& o : obs) owned.push_back(try_prepare_patch(*ctx, o.cell));
    for (const auto& p : owned) patches.push_back(p ? &*p : nullptr);
  }
  LossGraph graph(use);
  graph.add_observations(obs, patches);
  diff::Tape tape;
  const auto net = diff::bind(tape, model.params);
  return graph.build(tape, net, LossWeights{1.0, 0.0, 0.0, 0.0}).components.data;
}

double pde_loss(const SurrogateModel& model, std::span<const CellIndex> centers, const ConstraintContext& ctx) {
  if (centers.empty()) return 0.0;
  std::vector<PreparedPatch> owned;
  owned.reserve(centers.size());
  for (const CellIndex& c : centers) owned.push_back(prepare_patch(ctx, c));
  std::vector<const PreparedPatch*> patches;
  for (const PreparedPatch& p : owned) patches.push_back(&p);
  LossGraph graph(ctx);
  graph.add_collocation(patches);
  diff::Tape tape;
  const auto net = diff::bind(tape, model.params);
  return graph.build(tape, net, LossWeights{0.0, 1.0, 0.0, 0.0}).components.pde;
}

std::pair<double, double> condition_losses(const SurrogateModel& model, std::span<const BoundarySample> boundary,
                                           std::span<const InitialSample> initial, const ConstraintContext& ctx) {
  LossGraph graph(ctx);
  graph.add_boundary(boundary);
  graph.add_initial(initial);
  diff::Tape tape;
  const auto net = diff::bind(tape, model.params);
  const auto r = graph.build(tape, net, LossWeights{0.0, 0.0, 1.0, 1.0});
  return {r.components.bc, r.components.ic};
}

std::array<std::optional<double>, hcp::kSlotCount> forward_patch(const SurrogateModel& model,
                                                                 const hcp::StencilPatch& patch) {
  std::array<std::optional<double>, hcp::kSlotCount> out;
  std::vector<CellIndex> cells;
  std::vector<int> slots;
  for (int k = 0; k < hcp::kSlotCount; ++k) {
    switch (patch.state[static_cast<std::size_t>(k)]) {
      case hcp::SlotState::Unknown:
        cells.push_back(patch.cell(static_cast<hcp::Slot>(k)));
        slots.push_back(k);
        break;
      case hcp::SlotState::Known: out[static_cast<std::size_t>(k)] = patch.known[static_cast<std::size_t>(k)]; break;
      case hcp::SlotState::Ghost:
      case hcp::SlotState::Eliminated: break;
    }
  }
  const Eigen::VectorXd u = model.predict_normalized(cells);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    out[static_cast<std::size_t>(slots[k])] = model.norm.denormalize_head(u[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

}  // namespace tghcp::train
