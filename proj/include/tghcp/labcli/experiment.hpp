#pragma once

#include "tghcp/flowsim/grid.hpp"
#include "tghcp/randfield/kle.hpp"
#include "tghcp/tgtrain/dataset.hpp"
#include "tghcp/tgtrain/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tghcp::lab {

/// Grid, boundary and random-field settings of one experiment.
struct ProblemSetup {
  flow::GridSpec grid;
  flow::BoundarySpec boundary;
  double log_k_variance = 1.0;
  double correlation_length = 408.0;
  int kle_terms = 20;
  int observation_horizon = 18;

  randfield::CovarianceSpec covariance() const;
  void validate() const;
};

/// Sample counts. Observations are a total spread evenly over the observed
/// steps (earlier steps take the remainder); boundary samples are per edge.
struct SampleCounts {
  int observations = 180;
  int collocation = 400;
  int boundary_per_edge = 10;
  int initial = 200;

  static SampleCounts with_per_step(int per_step, int horizon = 18);
  /// Observation count drawn at step t (1-based).
  int observations_at(int t, int horizon) const;
};

struct GeneratedProblem {
  randfield::ConductivityField field;
  flow::HeadField truth;
  train::TrainingDataset dataset;
};

/// Samples a field from `basis`, simulates it and draws the training sets.
/// Observations: distinct cells per observed step. Collocation: distinct
/// (cell, step) pairs over non-Dirichlet cells and steps 1..nt. Boundary:
/// random cells and steps 1..nt on every edge. Initial: distinct cells at t=0.
GeneratedProblem generate_problem(const ProblemSetup& setup, const randfield::KleBasis& basis, std::uint64_t seed,
                                  const SampleCounts& counts);

/// ||pred - truth|| / ||truth|| over every value. Throws NumericError for a
/// zero-norm truth and ValidationError on a shape mismatch.
double relative_l2(const flow::HeadField& prediction, const flow::HeadField& truth);

/// Relative L2 of normalized heads over steps first..last (inclusive).
double normalized_relative_l2(const flow::HeadField& prediction, const flow::HeadField& truth,
                              const train::Normalization& norm, int first, int last);
/// Per-step normalized relative L2 for t = 0..nt.
std::vector<double> normalized_relative_l2_per_step(const flow::HeadField& prediction, const flow::HeadField& truth,
                                                    const train::Normalization& norm);

struct BenchRow {
  int step = 0;
  double simulation_seconds = 0.0;
  double inference_seconds = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Cumulative simulation time to each step against the time to predict that
/// single step's slice. Inference times are the minimum over `repeats`.
std::vector<BenchRow> bench_inference_vs_simulation(const train::SurrogateModel& model,
                                                    const randfield::ConductivityField& field,
                                                    const flow::BoundarySpec& boundary, const std::vector<int>& steps,
                                                    int repeats = 5);

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

}  // namespace tghcp::lab
