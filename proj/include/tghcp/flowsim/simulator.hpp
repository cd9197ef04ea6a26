#pragma once

#include "tghcp/flowsim/grid.hpp"
#include "tghcp/randfield/kle.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

namespace tghcp::flow {

/// Harmonic mean 2ab/(a+b); 0 when either side is 0. Negative input throws
/// ValidationError.
double interface_conductivity(double k_a, double k_b);

/// Backward-Euler system for the free (non-Dirichlet) cells:
///   (S_s/dt + sum_f c_f) h_p - sum_f c_f h_f = S_s/dt h_p^{prev} + pinned terms,
/// with c_f the face conductivity over dx^2 (or dy^2).
struct StepSystem {
  Eigen::SparseMatrix<double> matrix;
  std::vector<int> unknown_of_cell;  // -1 for pinned cells
  std::vector<int> cell_of_unknown;
  Eigen::VectorXd pinned_rhs;
  std::vector<double> pinned_head;   // per cell; NaN when free
  double storage = 0.0;

  int unknowns() const { return static_cast<int>(cell_of_unknown.size()); }
  Eigen::VectorXd rhs(const std::vector<double>& previous) const;
};

StepSystem assemble_step_system(const randfield::ConductivityField& k, const GridSpec& grid,
                                const BoundarySpec& boundary);

struct StepReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// One implicit step. Preconditioned CG to ||r||/||rhs|| <= 1e-12 within
/// 5n iterations, else SolverError. Pinned cells are re-imposed exactly.
std::vector<double> step(const std::vector<double>& previous, const StepSystem& system,
                         StepReport* report = nullptr);

/// Initial condition slice (row-major, j * nx + i).
std::vector<double> initial_condition(const GridSpec& grid, const BoundarySpec& boundary);

HeadField simulate(const randfield::ConductivityField& k, const GridSpec& grid, const BoundarySpec& boundary);

/// Cumulative wall time (seconds) to march from t = 0 to each listed step.
std::vector<double> timing_profile(const randfield::ConductivityField& k, const GridSpec& grid,
                                   const BoundarySpec& boundary, const std::vector<int>& steps);

}  // namespace tghcp::flow
