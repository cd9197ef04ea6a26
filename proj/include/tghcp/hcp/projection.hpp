#pragma once

#include "tghcp/hcp/constraint.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace tghcp::hcp {

/// Orthogonal projection onto the hyperplane {w : a . w = b} of one patch,
///   w* = P w + offset,  P = I - a^T (a a^T)^{-1} a,  offset = a^T (a a^T)^{-1} b.
/// With a single constraint row (a a^T) is a positive scalar.
struct ProjectionOperator {
  std::vector<int> slots;  // unknown slot indices, same order as the vectors below
  Eigen::VectorXd row;
  double rhs = 0.0;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;

  int size() const { return static_cast<int>(slots.size()); }
  /// Position of `s` among the projected slots, or -1.
  int position(Slot s) const;
};

/// Throws DegeneratePatchError on an unresolved ghost slot and
/// SingularConstraintError when the reduced row is zero.
ProjectionOperator build_projection(const ConstraintSystem& system);

/// Throws UsageError when the vector length differs from the unknown count.
Eigen::VectorXd project(const ProjectionOperator& op, const Eigen::VectorXd& h);

/// Patch-wise project(); no coupling between patches. Throws UsageError on a
/// ragged batch.
std::vector<Eigen::VectorXd> batch_project(std::span<const ProjectionOperator> ops,
                                           std::span<const Eigen::VectorXd> hs);

/// Debug dump of one patch: row, rhs, slot states, P and offset.
nlohmann::json to_json(const ConstraintSystem& system, const ProjectionOperator& op);

}  // namespace tghcp::hcp
