#include "tghcp/hcp/constraint.hpp"

#include "tghcp/errors.hpp"
#include "tghcp/flowsim/simulator.hpp"

#include <string>

namespace tghcp::hcp {

namespace {

std::size_t at(Slot s) { return static_cast<std::size_t>(index(s)); }

double spacing_squared(Slot s, const flow::GridSpec& grid) {
  return (s == Slot::XMinus || s == Slot::XPlus) ? grid.dx * grid.dx : grid.dy * grid.dy;
}

// a2 = -S_s/dt - sum of face coefficients, with faces of eliminated slots at 0.
void recompute_center(ConstraintSystem& sys) {
  double a2 = -sys.row[at(Slot::Previous)];
  for (Slot s : kNeighbourSlots) a2 -= sys.row[at(s)];
  sys.row[at(Slot::Center)] = a2;
}

std::string describe(const CellIndex& c) {
  return "(" + std::to_string(c.i) + "," + std::to_string(c.j) + ",t=" + std::to_string(c.t) + ")";
}

}  // namespace

const char* slot_name(Slot s) {
  switch (s) {
    case Slot::Previous: return "previous";
    case Slot::Center: return "center";
    case Slot::XMinus: return "x-";
    case Slot::XPlus: return "x+";
    case Slot::YMinus: return "y-";
    case Slot::YPlus: return "y+";
  }
  return "?";
}

Slot opposite(Slot s) {
  switch (s) {
    case Slot::XMinus: return Slot::XPlus;
    case Slot::XPlus: return Slot::XMinus;
    case Slot::YMinus: return Slot::YPlus;
    case Slot::YPlus: return Slot::YMinus;
    default: throw UsageError(std::string("slot ") + slot_name(s) + " has no spatial opposite");
  }
}

flow::Edge ghost_edge(Slot s) {
  switch (s) {
    case Slot::XMinus: return flow::Edge::XMin;
    case Slot::XPlus: return flow::Edge::XMax;
    case Slot::YMinus: return flow::Edge::YMin;
    case Slot::YPlus: return flow::Edge::YMax;
    default: throw UsageError(std::string("slot ") + slot_name(s) + " cannot be a ghost");
  }
}

CellIndex StencilPatch::cell(Slot s) const {
  CellIndex c = center;
  switch (s) {
    case Slot::Previous: c.t -= 1; break;
    case Slot::Center: break;
    case Slot::XMinus: c.i -= 1; break;
    case Slot::XPlus: c.i += 1; break;
    case Slot::YMinus: c.j -= 1; break;
    case Slot::YPlus: c.j += 1; break;
  }
  return c;
}

int StencilPatch::unknown_count() const {
  int n = 0;
  for (SlotState s : state) n += s == SlotState::Unknown ? 1 : 0;
  return n;
}

StencilPatch make_patch(const CellIndex& center, const flow::GridSpec& grid, const flow::BoundarySpec& boundary) {
  if (center.t < 1) throw ValidationError("patch at t=0 has no previous time slot");
  if (center.t > grid.nt) throw ValidationError("patch time index beyond the simulated horizon");
  if (!grid.contains(center.i, center.j)) throw ValidationError("patch centre outside the grid " + describe(center));
  if (boundary.pinned(grid, center.i, center.j)) {
    throw ValidationError("Dirichlet cell " + describe(center) + " cannot be a patch centre");
  }
  StencilPatch p;
  p.center = center;
  p.state.fill(SlotState::Unknown);
  p.known.fill(0.0);
  if (center.t == 1) {
    p.state[at(Slot::Previous)] = SlotState::Known;
    p.known[at(Slot::Previous)] = boundary.initial_value(grid, center.i, center.j);
  }
  for (Slot s : kNeighbourSlots) {
    const CellIndex c = p.cell(s);
    double head = 0.0;
    if (!grid.contains(c.i, c.j)) {
      p.state[at(s)] = SlotState::Ghost;
    } else if (boundary.pinned(grid, c.i, c.j, &head)) {
      p.state[at(s)] = SlotState::Known;
      p.known[at(s)] = head;
    }
  }
  return p;
}

double ConstraintSystem::coefficient_sum() const {
  double s = 0.0;
  for (double c : row) s += c;
  return s;
}

bool ConstraintSystem::has_ghost() const {
  for (SlotState s : state)
    if (s == SlotState::Ghost) return true;
  return false;
}

int ConstraintSystem::unknown_position(Slot s) const {
  for (std::size_t k = 0; k < unknown_slots.size(); ++k)
    if (unknown_slots[k] == index(s)) return static_cast<int>(k);
  return -1;
}

double ConstraintSystem::full_residual(const std::array<double, kSlotCount>& values) const {
  double r = 0.0;
  for (std::size_t k = 0; k < kSlotCount; ++k) {
    if (state[k] == SlotState::Eliminated) continue;
    r += row[k] * (state[k] == SlotState::Known ? known[k] : values[k]);
  }
  return r;
}

double ConstraintSystem::reduced_residual(const Eigen::VectorXd& h_u) const {
  if (h_u.size() != reduced.size()) throw UsageError("prediction length does not match the unknown slots");
  return reduced.dot(h_u) - rhs;
}

void ConstraintSystem::refresh() {
  unknown_slots.clear();
  rhs = 0.0;
  for (int k = 0; k < kSlotCount; ++k) {
    switch (state[static_cast<std::size_t>(k)]) {
      case SlotState::Unknown: unknown_slots.push_back(k); break;
      case SlotState::Known: rhs -= row[static_cast<std::size_t>(k)] * known[static_cast<std::size_t>(k)]; break;
      case SlotState::Ghost:
      case SlotState::Eliminated: break;
    }
  }
  reduced.resize(static_cast<Eigen::Index>(unknown_slots.size()));
  for (std::size_t k = 0; k < unknown_slots.size(); ++k) {
    reduced[static_cast<Eigen::Index>(k)] = row[static_cast<std::size_t>(unknown_slots[k])];
  }
}

ConstraintSystem build_constraint_row(const StencilPatch& patch, const randfield::ConductivityField& k,
                                      const flow::GridSpec& grid) {
  if (patch.center.t < 1) throw ValidationError("patch at t=0 has no previous time slot");
  if (k.nx != grid.nx || k.ny != grid.ny) throw ValidationError("conductivity field does not match the grid");
  const CellIndex& c = patch.center;
  if (!grid.contains(c.i, c.j)) throw ValidationError("patch centre outside the grid " + describe(c));

  ConstraintSystem sys;
  sys.center = c;
  sys.state = patch.state;
  sys.known = patch.known;
  sys.row[at(Slot::Previous)] = grid.storage_coefficient();
  const double k_center = k.at(c.i, c.j);
  for (Slot s : kNeighbourSlots) {
    CellIndex n = patch.cell(s);
    if (!grid.contains(n.i, n.j)) {
      n = patch.cell(opposite(s));
      if (!grid.contains(n.i, n.j)) throw ValidationError("patch " + describe(c) + " has no interior mirror");
    }
    sys.row[at(s)] = flow::interface_conductivity(k_center, k.at(n.i, n.j)) / spacing_squared(s, grid);
  }
  recompute_center(sys);
  sys.refresh();
  return sys;
}

ConstraintSystem apply_noflow_ghost(ConstraintSystem system, Slot ghost) {
  if (ghost == Slot::Previous || ghost == Slot::Center ||
      system.state[at(ghost)] != SlotState::Ghost) {
    throw UsageError(std::string("no-flow rewrite needs a ghost slot; ") + slot_name(ghost) + " is inside the domain");
  }
  system.row[at(ghost)] = 0.0;
  system.state[at(ghost)] = SlotState::Eliminated;
  system.known[at(ghost)] = 0.0;
  recompute_center(system);
  system.refresh();
  return system;
}

ConstraintSystem apply_constant_pressure_ghost(ConstraintSystem system, Slot ghost,
                                               flow::EdgeCondition edge_condition) {
  if (edge_condition != flow::EdgeCondition::Dirichlet) {
    throw UsageError("constant-pressure rewrite applied to a non-Dirichlet edge");
  }
  if (ghost == Slot::Previous || ghost == Slot::Center ||
      system.state[at(ghost)] != SlotState::Ghost) {
    throw UsageError(std::string("constant-pressure rewrite needs a ghost slot; ") + slot_name(ghost) +
                     " is inside the domain");
  }
  const Slot inner = opposite(ghost);
  if (system.state[at(inner)] == SlotState::Ghost) throw UsageError("inner slot of a ghost is itself a ghost");
  const double c_g = system.row[at(ghost)];
  system.row[at(Slot::Center)] += 2.0 * c_g;
  system.row[at(inner)] -= c_g;
  system.row[at(ghost)] = 0.0;
  system.state[at(ghost)] = SlotState::Eliminated;
  system.known[at(ghost)] = 0.0;
  system.refresh();
  return system;
}

ConstraintSystem fold_known_slots(ConstraintSystem system,
                                  const std::array<std::optional<double>, kSlotCount>& values) {
  for (std::size_t k = 0; k < kSlotCount; ++k) {
    if (!values[k]) continue;
    if (system.state[k] == SlotState::Eliminated || system.state[k] == SlotState::Ghost) {
      throw UsageError(std::string("cannot fold a value into ") + slot_name(static_cast<Slot>(k)) +
                       " slot that is not part of the equation");
    }
    system.state[k] = SlotState::Known;
    system.known[k] = *values[k];
  }
  system.refresh();
  if (system.unknown_slots.empty()) {
    throw DegeneratePatchError("every slot of patch " + describe(system.center) + " is known; nothing to project");
  }
  return system;
}

ConstraintSystem resolve_ghosts(ConstraintSystem system, const flow::BoundarySpec& boundary) {
  for (Slot s : kNeighbourSlots) {
    if (system.state[at(s)] != SlotState::Ghost) continue;
    const flow::EdgeCondition cond = boundary.edge(ghost_edge(s)).condition;
    system = cond == flow::EdgeCondition::NoFlow ? apply_noflow_ghost(std::move(system), s)
                                                 : apply_constant_pressure_ghost(std::move(system), s, cond);
  }
  return system;
}

ConstraintSystem build_patch_system(const CellIndex& center, const randfield::ConductivityField& k,
                                    const flow::GridSpec& grid, const flow::BoundarySpec& boundary) {
  const StencilPatch patch = make_patch(center, grid, boundary);
  ConstraintSystem sys = resolve_ghosts(build_constraint_row(patch, k, grid), boundary);
  if (sys.unknown_slots.empty()) {
    throw DegeneratePatchError("every slot of patch " + describe(center) + " is known; nothing to project");
  }
  return sys;
}

ConstraintSystem rescale_values(ConstraintSystem system, double shift, double scale) {
  if (!(scale != 0.0)) throw UsageError("rescale_values needs a non-zero scale");
  for (std::size_t k = 0; k < kSlotCount; ++k) {
    if (system.state[k] == SlotState::Known) system.known[k] = (system.known[k] - shift) / scale;
  }
  system.refresh();
  return system;
}

ConstraintSystem scale_equation(ConstraintSystem system, double factor) {
  if (!(factor != 0.0)) throw UsageError("scale_equation needs a non-zero factor");
  for (double& c : system.row) c *= factor;
  system.refresh();
  return system;
}

}  // namespace tghcp::hcp
