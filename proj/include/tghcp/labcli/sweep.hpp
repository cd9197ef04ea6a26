#pragma once

#include "tghcp/labcli/experiment.hpp"
#include "tghcp/tgtrain/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tghcp::lab {

enum class SweepAxis { Collocation, Boundary, Observation, Noise, Outlier };

const char* axis_name(SweepAxis a);
SweepAxis parse_axis(const std::string& name);
/// Default value list for an axis (percent for noise and outliers).
std::vector<double> default_axis_values(SweepAxis a);

struct ExperimentConfig {
  SweepAxis axis = SweepAxis::Observation;
  std::vector<double> values{180};
  int repeats = 5;
  std::uint64_t master_seed = 1;
  std::vector<train::Variant> variants{train::Variant::Ann, train::Variant::Soft, train::Variant::Hcp};
  ProblemSetup setup;
  SampleCounts counts;
  double noise_percent = 0.0;
  double outlier_percent = 0.0;
  /// Variant and seed are filled per run.
  train::TrainConfig training;
  /// Overrides the PDE residual scale (default dt / S_s).
  std::optional<double> pde_scale;
  std::string output_dir = "sweep_out";

  void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);

/// Deterministic seed for (master, axis value, repeat, stream tag).
std::uint64_t derive_seed(std::uint64_t master, double value, int repeat, std::uint64_t tag);

/// Everything shared by the variants of one (axis value, repeat) cell.
struct CellPlan {
  double value = 0.0;
  int repeat = 0;
  SampleCounts counts;
  train::CorruptionSpec corruption;
  std::uint64_t dataset_seed = 0;
  std::uint64_t training_seed = 0;
};

CellPlan plan_cell(const ExperimentConfig& c, double value, int repeat);

struct MetricsRecord {
  double axis_value = 0.0;
  train::Variant variant = train::Variant::Hcp;
  int repeat = 0;
  /// Normalized relative L2 over steps 1..nt.
  double relative_l2 = 0.0;
  /// Relative L2 of raw heads over steps 1..nt.
  double raw_relative_l2 = 0.0;
  std::vector<double> per_step;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct RunOutcome {
  MetricsRecord record;
  train::TrainResult result;
};

/// Trains one variant on a generated (and possibly corrupted) problem and
/// scores it against the truth.
RunOutcome run_variant(const ExperimentConfig& c, const GeneratedProblem& problem, const CellPlan& plan,
                       train::Variant variant);

using SweepProgress = std::function<void(const MetricsRecord&)>;

/// Runs every (value, repeat, variant) cell. Variants of one cell share the
/// field, dataset, corruption draws and initial weights. A failing run is
/// recorded with its error and the sweep continues. Writes records.csv,
/// per_step.csv, summary.csv, summary.txt and histories/ under output_dir.
std::vector<MetricsRecord> run_sweep(const ExperimentConfig& c, const SweepProgress& progress = {});

void write_records_csv(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_records_csv(const std::string& path);

struct SummaryRow {
  double axis_value = 0.0;
  train::Variant variant = train::Variant::Hcp;
  int count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one record
  double median = 0.0;
};

/// One row per (value, variant) in the given order; cells without
/// successful records get count 0.
std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records, const std::vector<double>& values,
                                  const std::vector<train::Variant>& variants);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
/// Table text: one line per value, one "mean±std" column per variant, "n/a"
/// for gaps.
std::string format_table(SweepAxis axis, const std::vector<SummaryRow>& rows, const std::vector<double>& values,
                         const std::vector<train::Variant>& variants);

/// Re-aggregates a finished sweep directory; returns the table text.
std::string report(const std::string& output_dir);

}  // namespace tghcp::lab
