#include "tghcp/flowsim/simulator.hpp"

#include "tghcp/errors.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace tghcp::flow {

double interface_conductivity(double k_a, double k_b) {
  if (k_a < 0.0 || k_b < 0.0 || std::isnan(k_a) || std::isnan(k_b)) {
    throw ValidationError("interface conductivity requires non-negative inputs");
  }
  if (k_a == 0.0 || k_b == 0.0) return 0.0;
  return 2.0 * k_a * k_b / (k_a + k_b);
}

Eigen::VectorXd StepSystem::rhs(const std::vector<double>& previous) const {
  Eigen::VectorXd b = pinned_rhs;
  for (int u = 0; u < unknowns(); ++u) b[u] += storage * previous[static_cast<std::size_t>(cell_of_unknown[u])];
  return b;
}

StepSystem assemble_step_system(const randfield::ConductivityField& k, const GridSpec& grid,
                                const BoundarySpec& boundary) {
  grid.validate();
  boundary.validate();
  if (k.nx != grid.nx || k.ny != grid.ny) throw ValidationError("conductivity field does not match the grid");

  StepSystem sys;
  sys.storage = grid.storage_coefficient();
  const int n_cells = grid.cells();
  sys.unknown_of_cell.assign(static_cast<std::size_t>(n_cells), -1);
  sys.pinned_head.assign(static_cast<std::size_t>(n_cells), std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      double h = 0.0;
      const int p = grid.cell(i, j);
      if (boundary.pinned(grid, i, j, &h)) {
        sys.pinned_head[static_cast<std::size_t>(p)] = h;
      } else {
        if (!(k.k[p] > 0.0)) throw ValidationError("conductivity must be positive on free cells");
        sys.unknown_of_cell[static_cast<std::size_t>(p)] = static_cast<int>(sys.cell_of_unknown.size());
        sys.cell_of_unknown.push_back(p);
      }
    }
  }

  const int n = sys.unknowns();
  sys.pinned_rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 5);
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  for (int u = 0; u < n; ++u) {
    const int p = sys.cell_of_unknown[u];
    const int i = p % grid.nx;
    const int j = p / grid.nx;
    double diag = sys.storage;
    for (int f = 0; f < 4; ++f) {
      const int ni = i + di[f];
      const int nj = j + dj[f];
      if (!grid.contains(ni, nj)) continue;  // no-flow edge: zero face conductivity
      const int q = grid.cell(ni, nj);
      const double spacing = f < 2 ? grid.dx : grid.dy;
      const double c = interface_conductivity(k.k[p], k.k[q]) / (spacing * spacing);
      diag += c;
      const double pinned = sys.pinned_head[static_cast<std::size_t>(q)];
      if (!std::isnan(pinned)) {
        sys.pinned_rhs[u] += c * pinned;
      } else if (c != 0.0) {
        triplets.emplace_back(u, sys.unknown_of_cell[static_cast<std::size_t>(q)], -c);
      }
    }
    if (!(diag > 0.0)) throw AssemblyError("all-zero row at cell " + std::to_string(p));
    triplets.emplace_back(u, u, diag);
  }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  return sys;
}

std::vector<double> step(const std::vector<double>& previous, const StepSystem& system, StepReport* report) {
  if (previous.size() != system.unknown_of_cell.size()) throw UsageError("previous field has the wrong size");
  const int n = system.unknowns();
  std::vector<double> next = previous;
  for (std::size_t p = 0; p < next.size(); ++p) {
    if (!std::isnan(system.pinned_head[p])) next[p] = system.pinned_head[p];
  }
  if (n == 0) return next;

  const Eigen::VectorXd b = system.rhs(previous);
  Eigen::VectorXd guess(n);
  for (int u = 0; u < n; ++u) guess[u] = previous[static_cast<std::size_t>(system.cell_of_unknown[u])];

  constexpr double kTolerance = 1e-12;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  // Eigen tests a recurrence residual; aim below the contract so the true
  // residual also meets it.
  cg.setTolerance(0.1 * kTolerance);
  cg.setMaxIterations(5 * n);
  cg.compute(system.matrix);
  Eigen::VectorXd x = cg.solveWithGuess(b, guess);

  const double bnorm = b.norm();
  const double rel = bnorm > 0.0 ? (b - system.matrix * x).norm() / bnorm : 0.0;
  if (!(rel <= kTolerance) || !x.allFinite()) {
    throw SolverError("CG did not converge after " + std::to_string(cg.iterations()) +
                      " iterations; relative residual " + std::to_string(rel));
  }
  if (report) *report = {static_cast<int>(cg.iterations()), rel};
  for (int u = 0; u < n; ++u) next[static_cast<std::size_t>(system.cell_of_unknown[u])] = x[u];
  return next;
}

std::vector<double> initial_condition(const GridSpec& grid, const BoundarySpec& boundary) {
  std::vector<double> h(static_cast<std::size_t>(grid.cells()));
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) h[static_cast<std::size_t>(grid.cell(i, j))] = boundary.initial_value(grid, i, j);
  return h;
}

HeadField simulate(const randfield::ConductivityField& k, const GridSpec& grid, const BoundarySpec& boundary) {
  const StepSystem sys = assemble_step_system(k, grid, boundary);
  HeadField out(grid.nt, grid.ny, grid.nx);
  std::vector<double> h = initial_condition(grid, boundary);
  std::copy(h.begin(), h.end(), out.slice(0));
  for (int t = 1; t <= grid.nt; ++t) {
    h = step(h, sys);
    std::copy(h.begin(), h.end(), out.slice(t));
  }
  return out;
}

std::vector<double> timing_profile(const randfield::ConductivityField& k, const GridSpec& grid,
                                   const BoundarySpec& boundary, const std::vector<int>& steps) {
  using clock = std::chrono::steady_clock;
  std::vector<double> seconds(steps.size(), 0.0);
  if (steps.empty()) return seconds;
  const int last = *std::max_element(steps.begin(), steps.end());
  if (last <= 0) return seconds;

  const auto start = clock::now();
  const StepSystem sys = assemble_step_system(k, grid, boundary);
  std::vector<double> h = initial_condition(grid, boundary);
  std::vector<double> at_step(static_cast<std::size_t>(last) + 1, 0.0);
  for (int t = 1; t <= last; ++t) {
    h = step(h, sys);
    at_step[static_cast<std::size_t>(t)] = std::chrono::duration<double>(clock::now() - start).count();
  }
  for (std::size_t s = 0; s < steps.size(); ++s) seconds[s] = steps[s] <= 0 ? 0.0 : at_step[static_cast<std::size_t>(steps[s])];
  return seconds;
}

}  // namespace tghcp::flow
