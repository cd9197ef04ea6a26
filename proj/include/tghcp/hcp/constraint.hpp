#pragma once

#include "tghcp/flowsim/grid.hpp"
#include "tghcp/randfield/kle.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace tghcp::hcp {

/// Slot order of the six-point space-time stencil.
enum class Slot : int { Previous = 0, Center = 1, XMinus = 2, XPlus = 3, YMinus = 4, YPlus = 5 };
inline constexpr int kSlotCount = 6;
inline constexpr std::array<Slot, 4> kNeighbourSlots{Slot::XMinus, Slot::XPlus, Slot::YMinus, Slot::YPlus};

constexpr int index(Slot s) { return static_cast<int>(s); }
const char* slot_name(Slot s);
/// XMinus <-> XPlus, YMinus <-> YPlus.
Slot opposite(Slot s);

enum class SlotState {
  Unknown,     // predicted by the network, adjusted by projection
  Known,       // fixed data folded into the right-hand side
  Ghost,       // outside the domain, waiting for a boundary rewrite
  Eliminated,  // removed by a boundary rewrite
};

struct CellIndex {
  int i = 0;
  int j = 0;
  int t = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Constraint patch around cell (i, j) at time index t >= 1.
struct StencilPatch {
  CellIndex center;
  std::array<SlotState, kSlotCount> state{};
  std::array<double, kSlotCount> known{};

  /// Grid location of a slot; may lie outside the domain for ghost slots.
  CellIndex cell(Slot s) const;
  int unknown_count() const;
};

/// Classifies the six slots of the patch at (i, j, t): the t-1 slot is known
/// at t = 1 (initial condition), Dirichlet neighbours are known, cells
/// outside the grid are ghosts. Throws ValidationError for t < 1, a centre
/// outside the grid, or a Dirichlet centre.
StencilPatch make_patch(const CellIndex& center, const flow::GridSpec& grid, const flow::BoundarySpec& boundary);

/// One discretized flow equation on a patch: row . H = 0 over all six slots,
/// reduced to row_u . H_u = rhs over the unknown slots.
struct ConstraintSystem {
  CellIndex center;
  std::array<double, kSlotCount> row{};
  std::array<SlotState, kSlotCount> state{};
  std::array<double, kSlotCount> known{};
  std::vector<int> unknown_slots;
  Eigen::VectorXd reduced;
  double rhs = 0.0;

  double coefficient(Slot s) const { return row[static_cast<std::size_t>(index(s))]; }
  double coefficient_sum() const;
  bool has_ghost() const;
  /// Position of `s` within unknown_slots, or -1.
  int unknown_position(Slot s) const;
  /// full row . values (values in slot order; non-unknown slots use `known`).
  double full_residual(const std::array<double, kSlotCount>& values) const;
  /// row_u . h_u - rhs.
  double reduced_residual(const Eigen::VectorXd& h_u) const;
  /// Recomputes unknown_slots, reduced and rhs from row/state/known.
  void refresh();
};

/// Coefficients [S_s/dt, a2, K_{x-}/dx^2, K_{x+}/dx^2, K_{y-}/dy^2, K_{y+}/dy^2]
/// with harmonic face conductivities and
/// a2 = -S_s/dt - (K_{x-} + K_{x+})/dx^2 - (K_{y-} + K_{y+})/dy^2.
/// Ghost faces provisionally mirror the opposite neighbour's conductivity.
ConstraintSystem build_constraint_row(const StencilPatch& patch, const randfield::ConductivityField& k,
                                      const flow::GridSpec& grid);

/// No-flow ghost: zero face conductivity, slot eliminated, a2 recomputed.
/// Throws UsageError if `ghost` is not a ghost slot.
ConstraintSystem apply_noflow_ghost(ConstraintSystem system, Slot ghost);

/// Constant-pressure ghost: substitutes h_g = 2 h_0 - h_1 with k_g = k_1,
/// giving centre c0 + 2 c_g and inner c1 - c_g. Throws UsageError if `ghost`
/// is not a ghost slot or `edge_condition` is not Dirichlet.
ConstraintSystem apply_constant_pressure_ghost(ConstraintSystem system, Slot ghost,
                                               flow::EdgeCondition edge_condition);

/// Marks slots as known and moves them to the right-hand side:
/// rhs = -sum_k coefficient_k * value_k. Throws DegeneratePatchError when no
/// unknown slot remains.
ConstraintSystem fold_known_slots(ConstraintSystem system,
                                  const std::array<std::optional<double>, kSlotCount>& values);

/// Applies the edge-appropriate ghost rewrite to every ghost slot.
ConstraintSystem resolve_ghosts(ConstraintSystem system, const flow::BoundarySpec& boundary);

/// make_patch + build_constraint_row + resolve_ghosts + fold of the patch's knowns.
ConstraintSystem build_patch_system(const CellIndex& center, const randfield::ConductivityField& k,
                                    const flow::GridSpec& grid, const flow::BoundarySpec& boundary);

/// Affine change of units h' = (h - shift) / scale applied to known values.
/// Valid because the full row sums to zero.
ConstraintSystem rescale_values(ConstraintSystem system, double shift, double scale);

/// Multiplies the whole equation (row and rhs) by `factor`.
ConstraintSystem scale_equation(ConstraintSystem system, double factor);

/// Which edge a ghost slot crosses.
flow::Edge ghost_edge(Slot s);

}  // namespace tghcp::hcp
