#pragma once

#include "tghcp/diffcore/tape.hpp"
#include "tghcp/diffcore/network.hpp"
#include "tghcp/hcp/projection.hpp"
#include "tghcp/randfield/kle.hpp"
#include "tghcp/tgtrain/dataset.hpp"
#include "tghcp/tgtrain/model.hpp"

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace tghcp::train {

/// Physical setting shared by every loss that touches a constraint patch.
struct ConstraintContext {
  const randfield::ConductivityField* conductivity = nullptr;
  flow::GridSpec grid;
  flow::BoundarySpec boundary;
  Normalization norm;
  /// Multiplies each stencil residual inside MSE_PDE. The default dt/S_s
  /// expresses the residual as a head change per step.
  double pde_scale = 1.0;
};

/// Keeps a pointer to `k`, which must outlive the context.
ConstraintContext make_context(const randfield::ConductivityField& k, const flow::GridSpec& grid,
                               const flow::BoundarySpec& boundary);
ConstraintContext make_context(randfield::ConductivityField&&, const flow::GridSpec&,
                               const flow::BoundarySpec&) = delete;

/// Patch equation in normalized head units plus its projection.
struct PreparedPatch {
  hcp::ConstraintSystem system;
  hcp::ProjectionOperator projection;
  std::vector<CellIndex> unknown_cells;
  int center = -1;  // position of the centre among the unknowns
};

PreparedPatch prepare_patch(const ConstraintContext& ctx, const CellIndex& center);
/// nullopt for cells that cannot centre a patch (t = 0 or Dirichlet cells).
std::optional<PreparedPatch> try_prepare_patch(const ConstraintContext& ctx, const CellIndex& center);

struct LossWeights {
  double data = 1.0;
  double pde = 1.0;
  double bc = 1.0;
  double ic = 1.0;

  void validate() const;
};

struct LossComponents {
  double data = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double ic = 0.0;
};

/// Weights actually applied for a variant (ANN keeps only the data term).
LossWeights effective_weights(const LossWeights& w, Variant v);

/// lambda_DATA MSE_DATA + lambda_PDE MSE_PDE + lambda_BC MSE_BC + lambda_IC MSE_IC
/// with effective_weights(). Throws ConfigError when every weight is zero.
double total_loss(const LossWeights& weights, const LossComponents& c, Variant variant = Variant::Soft);

/// Collects evaluation points and the affine read-outs that turn one batched
/// network evaluation into the four loss components.
class LossGraph {
 public:
  explicit LossGraph(const ConstraintContext& ctx) : ctx_(&ctx) {}

  /// `patches[k]` non-null means observation k is read through its projected centre.
  void add_observations(std::span<const Observation> obs, std::span<const PreparedPatch* const> patches = {});
  void add_collocation(std::span<const PreparedPatch* const> patches);
  void add_boundary(std::span<const BoundarySample> samples, std::span<const PreparedPatch* const> patches = {});
  void add_initial(std::span<const InitialSample> samples);

  struct Result {
    diff::Var total;
    LossComponents components;
    double total_value = 0.0;
    /// Mean over collocation patches of ||H - H*|| / ||H|| in head units.
    double projection_change = 0.0;
  };

  Result build(diff::Tape& tape, const diff::BoundNetwork& net, const LossWeights& weights) const;

  std::size_t point_count() const { return points_.size(); }
  std::size_t observation_rows() const { return data_.rows; }

 private:
  struct Term {
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<double> offsets;
    std::size_t rows = 0;
  };

  int column(const CellIndex& c);
  /// Adds coefficient * (value at cell, or projected centre of patch) to the current row.
  void add_value(Term& term, const CellIndex& cell, const PreparedPatch* patch, double coefficient);
  void finish_row(Term& term, double offset);

  const ConstraintContext* ctx_;
  std::vector<CellIndex> points_;
  std::unordered_map<long long, int> column_of_;
  Term data_;
  Term pde_;
  Term bc_;
  Term ic_;
  std::vector<std::pair<const PreparedPatch*, std::vector<int>>> collocation_columns_;
};

/// Observation loss, projected through each observation's patch when `ctx`
/// is given, raw otherwise. `empty` is set for an empty observation set.
double observation_loss(const SurrogateModel& model, std::span<const Observation> obs,
                        const ConstraintContext* ctx, bool* empty = nullptr);

/// (1/N_f) sum (A_u H_u - b)^2 * pde_scale^2 on raw predictions.
double pde_loss(const SurrogateModel& model, std::span<const CellIndex> centers, const ConstraintContext& ctx);

/// MSE_BC and MSE_IC in normalized units, raw predictions.
std::pair<double, double> condition_losses(const SurrogateModel& model, std::span<const BoundarySample> boundary,
                                           std::span<const InitialSample> initial, const ConstraintContext& ctx);

/// Predictions in patch slot order, known slots substituted (head units),
/// eliminated slots empty.
std::array<std::optional<double>, hcp::kSlotCount> forward_patch(const SurrogateModel& model,
                                                                 const hcp::StencilPatch& patch);

}  // namespace tghcp::train
