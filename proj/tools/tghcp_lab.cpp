// Command-line harness: generate, train, sweep, bench, report.

#include "tghcp/errors.hpp"
#include "tghcp/flowsim/simulator.hpp"
#include "tghcp/labcli/experiment.hpp"
#include "tghcp/labcli/sweep.hpp"
#include "tghcp/tgtrain/losses.hpp"
#include "tghcp/tgtrain/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace tghcp;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant = "hcp";
  std::optional<int> epochs;
  std::string data;
  std::string checkpoint;
  std::string field;
  std::vector<int> steps{10, 50, 100, 500};
  bool quiet = false;
};

lab::ExperimentConfig base_config(const Options& o) {
  lab::ExperimentConfig c = o.config.empty() ? lab::experiment_from_json(nlohmann::json::object())
                                             : lab::load_experiment_config(o.config);
  if (o.epochs) c.training.epochs = *o.epochs;
  if (o.seed) c.master_seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

lab::GeneratedProblem make_problem(const lab::ExperimentConfig& c, std::uint64_t seed) {
  const randfield::KleBasis basis = randfield::build_basis(c.setup.covariance(), c.setup.kle_terms);
  return lab::generate_problem(c.setup, basis, seed, c.counts);
}

int cmd_generate(const Options& o) {
  const lab::ExperimentConfig c = base_config(o);
  const std::uint64_t seed = o.seed.value_or(c.master_seed);
  const fs::path dir = o.out.empty() ? fs::path("problem") : fs::path(o.out);
  fs::create_directories(dir);
  const lab::GeneratedProblem p = make_problem(c, seed);
  randfield::save_field((dir / "field.json").string(), p.field, c.setup.covariance());
  flow::save_head_field((dir / "truth.json").string(), p.truth, c.setup.grid, c.setup.boundary, seed);
  train::save_dataset((dir / "dataset.json").string(), p.dataset);
  write_json(dir / "config.json", lab::experiment_to_json(c));
  std::printf("generated seed=%llu observations=%zu collocation=%zu boundary=%zu initial=%zu -> %s\n",
              static_cast<unsigned long long>(seed), p.dataset.observations.size(), p.dataset.collocation.size(),
              p.dataset.boundary.size(), p.dataset.initial.size(), dir.string().c_str());
  return 0;
}

int cmd_train(const Options& o) {
  lab::ExperimentConfig c = base_config(o);
  const std::uint64_t seed = o.seed.value_or(c.master_seed);
  lab::GeneratedProblem p;
  if (!o.data.empty()) {
    const fs::path d(o.data);
    p.field = randfield::load_field((d / "field.json").string());
    p.truth = flow::load_head_field((d / "truth.json").string());
    p.dataset = train::load_dataset((d / "dataset.json").string());
  } else {
    p = make_problem(c, seed);
  }
  lab::CellPlan plan;
  plan.counts = c.counts;
  plan.training_seed = seed;
  plan.corruption.noise_level = c.noise_percent / 100.0;
  plan.corruption.outlier_fraction = c.outlier_percent / 100.0;
  plan.corruption.seed = lab::derive_seed(seed, 0.0, 0, 3);
  p.dataset = train::corrupt(std::move(p.dataset), plan.corruption);

  const train::Variant v = train::parse_variant(o.variant);
  lab::RunOutcome run = lab::run_variant(c, p, plan, v);
  const fs::path dir = o.out.empty() ? fs::path("run") : fs::path(o.out);
  fs::create_directories(dir);
  train::save_checkpoint((dir / "checkpoint.json").string(), run.result.model);
  run.result.history.save_csv((dir / "history.csv").string());
  randfield::save_field((dir / "field.json").string(), p.field, c.setup.covariance());
  const lab::MetricsRecord& r = run.record;
  write_json(dir / "metrics.json", {{"variant", train::variant_name(v)},
                                    {"seed", r.seed},
                                    {"relative_l2", r.relative_l2},
                                    {"raw_relative_l2", r.raw_relative_l2},
                                    {"final_loss", r.final_loss},
                                    {"wall_seconds", r.wall_seconds},
                                    {"per_step", r.per_step}});
  std::printf("variant=%s seed=%llu epochs=%d relative_l2=%.6f final_loss=%.6g wall=%.1fs -> %s\n",
              train::variant_name(v), static_cast<unsigned long long>(r.seed), c.training.epochs, r.relative_l2,
              r.final_loss, r.wall_seconds, dir.string().c_str());
  return 0;
}

int cmd_sweep(const Options& o) {
  if (o.config.empty()) throw UsageError("sweep needs --config");
  const lab::ExperimentConfig c = base_config(o);
  const bool quiet = o.quiet;
  lab::run_sweep(c, [quiet](const lab::MetricsRecord& r) {
    if (quiet) return;
    if (r.ok()) {
      std::printf("value=%g variant=%s repeat=%d relative_l2=%.6f wall=%.1fs\n", r.axis_value,
                  train::variant_name(r.variant), r.repeat, r.relative_l2, r.wall_seconds);
    } else {
      std::printf("value=%g variant=%s repeat=%d failed: %s\n", r.axis_value, train::variant_name(r.variant),
                  r.repeat, r.error.c_str());
    }
    std::fflush(stdout);
  });
  std::cout << lab::report(c.output_dir);
  return 0;
}

int cmd_bench(const Options& o) {
  if (o.checkpoint.empty() || o.field.empty()) throw UsageError("bench needs --checkpoint and --field");
  const train::SurrogateModel model = train::load_checkpoint(o.checkpoint);
  const randfield::ConductivityField field = randfield::load_field(o.field);
  flow::BoundarySpec boundary;
  if (!o.config.empty()) boundary = lab::load_experiment_config(o.config).setup.boundary;
  const auto rows = lab::bench_inference_vs_simulation(model, field, boundary, o.steps);
  std::vector<double> x, sim, inf;
  for (const auto& r : rows) {
    x.push_back(r.step);
    sim.push_back(r.simulation_seconds);
    inf.push_back(r.inference_seconds);
    std::printf("step=%d simulation=%.6fs inference=%.6fs\n", r.step, r.simulation_seconds, r.inference_seconds);
  }
  if (rows.size() >= 2) {
    const lab::LinearFit fit = lab::fit_line(x, sim);
    const auto [lo, hi] = std::minmax_element(inf.begin(), inf.end());
    std::printf("simulation slope=%.3es/step r2=%.4f; inference max/min=%.2f\n", fit.slope, fit.r_squared,
                *hi / *lo);
  }
  if (!o.out.empty()) lab::write_bench_csv(o.out, rows);
  return 0;
}

int cmd_report(const Options& o) {
  if (o.out.empty()) throw UsageError("report needs --out <sweep dir>");
  std::cout << lab::report(o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-constrained surrogate models for transient groundwater flow"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--seed", o.seed, "seed (u64)");
    sub->add_option("--out", o.out, "output directory or file");
    sub->add_option("--epochs", o.epochs, "training epochs");
  };

  CLI::App* gen = app.add_subcommand("generate", "sample a field, simulate it and draw a dataset");
  add_common(gen);
  CLI::App* tr = app.add_subcommand("train", "train one model variant");
  add_common(tr);
  tr->add_option("--variant", o.variant, "ann, soft or hcp")->check(CLI::IsMember({"ann", "soft", "hcp"}, CLI::ignore_case));
  tr->add_option("--data", o.data, "directory written by generate");
  CLI::App* sw = app.add_subcommand("sweep", "run an experiment sweep");
  add_common(sw);
  sw->add_flag("--quiet", o.quiet, "no per-run progress lines");
  CLI::App* be = app.add_subcommand("bench", "time simulation against network inference");
  be->add_option("--config", o.config, "experiment config for boundary settings");
  be->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
  be->add_option("--field", o.field, "conductivity field file")->required();
  be->add_option("--steps", o.steps, "target steps");
  be->add_option("--out", o.out, "CSV output");
  CLI::App* rep = app.add_subcommand("report", "aggregate a finished sweep");
  rep->add_option("--out", o.out, "sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error kind=usage message=\"%s\"\n", e.what());
    return 2;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*tr) return cmd_train(o);
    if (*sw) return cmd_sweep(o);
    if (*be) return cmd_bench(o);
    if (*rep) return cmd_report(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error kind=%s message=\"%s\"\n", e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error kind=internal message=\"%s\"\n", e.what());
    return 1;
  }
  return 2;
}
