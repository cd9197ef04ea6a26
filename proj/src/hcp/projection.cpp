#include "tghcp/hcp/projection.hpp"

#include "tghcp/errors.hpp"

#include <string>

namespace tghcp::hcp {

int ProjectionOperator::position(Slot s) const {
  for (std::size_t k = 0; k < slots.size(); ++k)
    if (slots[k] == index(s)) return static_cast<int>(k);
  return -1;
}

ProjectionOperator build_projection(const ConstraintSystem& system) {
  if (system.has_ghost()) throw DegeneratePatchError("patch still has an unresolved ghost slot");
  if (system.unknown_slots.empty()) throw DegeneratePatchError("patch has no unknown slot to project");
  const Eigen::VectorXd& a = system.reduced;
  const double gram = a.squaredNorm();
  if (!(gram > 0.0)) throw SingularConstraintError("constraint row is zero over the unknown slots");

  ProjectionOperator op;
  op.slots = system.unknown_slots;
  op.row = a;
  op.rhs = system.rhs;
  const Eigen::Index n = a.size();
  op.matrix = Eigen::MatrixXd::Identity(n, n) - (a * a.transpose()) / gram;
  op.offset = a * (system.rhs / gram);
  return op;
}

Eigen::VectorXd project(const ProjectionOperator& op, const Eigen::VectorXd& h) {
  if (h.size() != op.size()) {
    throw UsageError("projection expects " + std::to_string(op.size()) + " values, got " + std::to_string(h.size()));
  }
  return op.matrix * h + op.offset;
}

std::vector<Eigen::VectorXd> batch_project(std::span<const ProjectionOperator> ops,
                                           std::span<const Eigen::VectorXd> hs) {
  if (ops.size() != hs.size()) throw UsageError("batch of operators and predictions differ in length");
  std::vector<Eigen::VectorXd> out;
  out.reserve(hs.size());
  for (std::size_t b = 0; b < ops.size(); ++b) {
    if (hs[b].size() != ops[b].size()) throw UsageError("ragged batch at entry " + std::to_string(b));
    out.push_back(project(ops[b], hs[b]));
  }
  return out;
}

nlohmann::json to_json(const ConstraintSystem& system, const ProjectionOperator& op) {
  auto state_name = [](SlotState s) {
    switch (s) {
      case SlotState::Unknown: return "unknown";
      case SlotState::Known: return "known";
      case SlotState::Ghost: return "ghost";
      case SlotState::Eliminated: return "eliminated";
    }
    return "?";
  };
  nlohmann::json slots = nlohmann::json::array();
  for (int k = 0; k < kSlotCount; ++k) {
    nlohmann::json s = {{"slot", slot_name(static_cast<Slot>(k))},
                        {"coefficient", system.row[static_cast<std::size_t>(k)]},
                        {"state", state_name(system.state[static_cast<std::size_t>(k)])}};
    if (system.state[static_cast<std::size_t>(k)] == SlotState::Known) s["value"] = system.known[static_cast<std::size_t>(k)];
    slots.push_back(s);
  }
  nlohmann::json p = nlohmann::json::array();
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
    std::vector<double> rowv;
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) rowv.push_back(op.matrix(r, c));
    p.push_back(rowv);
  }
  return {{"center", {{"i", system.center.i}, {"j", system.center.j}, {"t", system.center.t}}},
          {"slots", slots},
          {"unknown_slots", op.slots},
          {"reduced_row", std::vector<double>(op.row.data(), op.row.data() + op.row.size())},
          {"rhs", op.rhs},
          {"projection", p},
          {"offset", std::vector<double>(op.offset.data(), op.offset.data() + op.offset.size())}};
}

}  // namespace tghcp::hcp
