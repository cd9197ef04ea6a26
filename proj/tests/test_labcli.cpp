#include "tghcp/errors.hpp"
#include "tghcp/labcli/experiment.hpp"
#include "tghcp/labcli/sweep.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace tghcp;
using namespace tghcp::lab;

namespace {

ProblemSetup small_setup() {
  ProblemSetup s;
  s.grid.nx = s.grid.ny = 11;
  s.grid.nt = 8;
  s.observation_horizon = 4;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MetricsRecord record(double value, train::Variant v, int rep, double err) {
  MetricsRecord r;
  r.axis_value = value;
  r.variant = v;
  r.repeat = rep;
  r.relative_l2 = err;
  r.raw_relative_l2 = err / 100.0;
  return r;
}

}  // namespace

TEST_CASE("observation counts per step") {
  const SampleCounts c = SampleCounts::with_per_step(10);
  CHECK(c.observations == 180);
  for (int t = 1; t <= 18; ++t) CHECK(c.observations_at(t, 18) == 10);
  CHECK(c.observations_at(19, 18) == 0);

  SampleCounts odd;
  odd.observations = 20;
  int total = 0;
  for (int t = 1; t <= 18; ++t) total += odd.observations_at(t, 18);
  CHECK(total == 20);
  CHECK(odd.observations_at(1, 18) == 2);
  CHECK(odd.observations_at(18, 18) == 1);
}

TEST_CASE("generated problem respects counts and is reproducible") {
  const ProblemSetup s = small_setup();
  const randfield::KleBasis basis = randfield::build_basis(s.covariance(), 5);
  SampleCounts c;
  c.observations = 20;
  c.collocation = 30;
  c.boundary_per_edge = 4;
  c.initial = 9;
  const GeneratedProblem p = generate_problem(s, basis, 17, c);
  CHECK(p.dataset.observations.size() == 20);
  CHECK(p.dataset.collocation.size() == 30);
  CHECK(p.dataset.boundary.size() == 16);
  CHECK(p.dataset.initial.size() == 9);
  CHECK_NOTHROW(p.dataset.validate(s.grid));

  std::set<std::tuple<int, int, int>> seen;
  for (const auto& o : p.dataset.observations) {
    CHECK(o.cell.t >= 1);
    CHECK(o.cell.t <= 4);
    CHECK(seen.insert({o.cell.i, o.cell.j, o.cell.t}).second);
    const double head = p.truth.at(o.cell.t, o.cell.j, o.cell.i);
    CHECK(std::abs(o.label - (head - 200.0) / 2.0) <= 1e-14);
  }
  for (const auto& b : p.dataset.boundary) {
    if (b.kind == train::BoundaryKind::Dirichlet) {
      CHECK((b.cell.i == 0 || b.cell.i == s.grid.nx - 1));
    } else {
      CHECK((b.cell.j == 0 || b.cell.j == s.grid.ny - 1));
      CHECK(std::abs(b.inner.j - b.cell.j) == 1);
    }
  }

  const GeneratedProblem q = generate_problem(s, basis, 17, c);
  CHECK(q.field.k == p.field.k);
  CHECK(q.truth.values() == p.truth.values());
  CHECK(q.dataset.collocation == p.dataset.collocation);

  SampleCounts none = c;
  none.observations = 0;
  CHECK(generate_problem(s, basis, 17, none).dataset.observations.empty());

  SampleCounts too_many = c;
  too_many.observations = 4 * 121 + 1;
  CHECK_THROWS_AS(generate_problem(s, basis, 17, too_many), ValidationError);
  SampleCounts bad = c;
  bad.collocation = -1;
  CHECK_THROWS_AS(generate_problem(s, basis, 17, bad), ValidationError);
}

TEST_CASE("relative L2 metrics") {
  flow::HeadField truth(3, 4, 5, 0.0);
  for (std::size_t k = 0; k < truth.values().size(); ++k) truth.values()[k] = 200.0 + 0.01 * static_cast<double>(k);
  CHECK(relative_l2(truth, truth) == 0.0);
  flow::HeadField scaled = truth;
  for (double& v : scaled.values()) v *= 1.1;
  CHECK(relative_l2(scaled, truth) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(relative_l2(truth, flow::HeadField(3, 4, 5, 0.0)), NumericError);
  CHECK_THROWS_AS(relative_l2(truth, flow::HeadField(2, 4, 5, 1.0)), ValidationError);

  const train::Normalization n{1.0, 1.0, 1.0, 200.0, 2.0};
  CHECK(normalized_relative_l2(truth, truth, n, 1, 3) == 0.0);
  // in normalized units u = (h - 200)/2 so a shift of 2*d in heads is d in u
  flow::HeadField shifted = truth;
  double num = 0.0, den = 0.0;
  for (int t = 1; t <= 3; ++t)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) {
        shifted.at(t, j, i) += 0.02;
        const double u = (truth.at(t, j, i) - 200.0) / 2.0;
        num += 0.01 * 0.01;
        den += u * u;
      }
  CHECK(normalized_relative_l2(shifted, truth, n, 1, 3) == doctest::Approx(std::sqrt(num / den)).epsilon(1e-10));
  const std::vector<double> per = normalized_relative_l2_per_step(shifted, truth, n);
  REQUIRE(per.size() == 4);
  CHECK(per[0] == 0.0);
  CHECK(per[1] > per[3]);
}

TEST_CASE("line fit") {
  const LinearFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  const LinearFit noisy = fit_line({0, 1, 2, 3}, {0, 1, 0, 1});
  CHECK(noisy.r_squared < 0.5);
  CHECK_THROWS(fit_line({1}, {2}));
}

TEST_CASE("axis names and defaults") {
  CHECK(parse_axis("noise") == SweepAxis::Noise);
  CHECK(std::string(axis_name(SweepAxis::Collocation)) == "collocation");
  CHECK_THROWS_AS(parse_axis("banana"), ConfigError);
  CHECK(default_axis_values(SweepAxis::Noise) == std::vector<double>{1, 10, 20, 40, 60});
  CHECK(default_axis_values(SweepAxis::Outlier) == std::vector<double>{1, 4, 7, 10});
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 180, 0, 1) == derive_seed(1, 180, 0, 1));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t m : {1, 2})
    for (double v : {10.0, 180.0})
      for (int r : {0, 1, 2})
        for (std::uint64_t tag : {1, 2, 3}) seeds.insert(derive_seed(m, v, r, tag));
  CHECK(seeds.size() == 36);

  ExperimentConfig c;
  const CellPlan a = plan_cell(c, 180, 2);
  const CellPlan b = plan_cell(c, 180, 2);
  CHECK(a.dataset_seed == b.dataset_seed);
  CHECK(a.training_seed == b.training_seed);
  CHECK(a.dataset_seed != plan_cell(c, 180, 3).dataset_seed);

  c.axis = SweepAxis::Noise;
  CHECK(plan_cell(c, 40, 0).corruption.noise_level == doctest::Approx(0.4));
  c.axis = SweepAxis::Observation;
  CHECK(plan_cell(c, 90, 0).counts.observations == 90);
}

TEST_CASE("experiment config JSON round-trip and validation") {
  ExperimentConfig c;
  c.axis = SweepAxis::Outlier;
  c.values = {1, 7};
  c.repeats = 2;
  c.master_seed = 77;
  c.variants = {train::Variant::Hcp};
  c.setup.grid.nx = 21;
  c.counts.collocation = 123;
  c.noise_percent = 5;
  c.training.epochs = 42;
  c.training.weights.ic = 0.25;
  c.pde_scale = 3.5;
  c.output_dir = "elsewhere";
  const ExperimentConfig r = experiment_from_json(experiment_to_json(c));
  CHECK(experiment_to_json(r) == experiment_to_json(c));
  CHECK(r.axis == SweepAxis::Outlier);
  CHECK(r.values == c.values);
  CHECK(r.setup.grid.nx == 21);
  CHECK(r.training.weights.ic == 0.25);
  REQUIRE(r.pde_scale.has_value());
  CHECK(*r.pde_scale == 3.5);

  CHECK_THROWS_AS(experiment_from_json(nlohmann::json{{"repeats", 0}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json{{"variants", {"pinn"}}}), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json{{"axis", "noise"}, {"values", {-5}}}), ConfigError);
}

TEST_CASE("summaries") {
  using train::Variant;
  const std::vector<MetricsRecord> recs{record(10, Variant::Ann, 0, 0.2), record(10, Variant::Ann, 1, 0.4),
                                        record(10, Variant::Hcp, 0, 0.1), record(20, Variant::Hcp, 0, 0.05)};
  const std::vector<SummaryRow> rows = summarize(recs, {10, 20}, {Variant::Ann, Variant::Hcp});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].count == 2);
  CHECK(rows[0].mean == doctest::Approx(0.3));
  CHECK(rows[0].std == doctest::Approx(0.2 / std::sqrt(2.0)));
  CHECK(rows[0].median == doctest::Approx(0.3));
  CHECK(rows[1].count == 1);
  CHECK(rows[1].std == 0.0);
  CHECK(rows[2].count == 0);
  const std::string table = format_table(SweepAxis::Noise, rows, {10, 20}, {Variant::Ann, Variant::Hcp});
  CHECK(table.find("n/a") != std::string::npos);

  MetricsRecord failed = record(10, Variant::Ann, 2, 0.0);
  failed.error = "diverged, at epoch 3";
  std::vector<MetricsRecord> with_failure = recs;
  with_failure.push_back(failed);
  CHECK(summarize(with_failure, {10}, {Variant::Ann})[0].count == 2);

  const auto path = std::filesystem::temp_directory_path() / "tghcp_records.csv";
  write_records_csv(path.string(), with_failure);
  const std::vector<MetricsRecord> back = read_records_csv(path.string());
  REQUIRE(back.size() == with_failure.size());
  CHECK(back[3].relative_l2 == 0.05);
  CHECK(back[3].variant == Variant::Hcp);
  CHECK_FALSE(back[4].ok());
  std::filesystem::remove(path);
}

TEST_CASE("a one-record sweep writes its outputs") {
  ExperimentConfig c;
  c.setup = small_setup();
  c.setup.kle_terms = 4;
  c.values = {8};
  c.repeats = 1;
  c.variants = {train::Variant::Hcp};
  c.counts.collocation = 20;
  c.counts.boundary_per_edge = 2;
  c.counts.initial = 6;
  c.training.epochs = 3;
  c.training.hidden = {6, 6};
  c.training.batch_size = 16;
  c.output_dir = (std::filesystem::temp_directory_path() / "tghcp_sweep_test").string();
  std::filesystem::remove_all(c.output_dir);

  int calls = 0;
  const std::vector<MetricsRecord> recs = run_sweep(c, [&](const MetricsRecord&) { ++calls; });
  CHECK(calls == 1);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].ok());
  CHECK(std::isfinite(recs[0].relative_l2));
  CHECK(recs[0].per_step.size() == 9);
  const std::filesystem::path dir(c.output_dir);
  for (const char* f : {"config.json", "records.csv", "per_step.csv", "summary.csv", "summary.txt"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(report(c.output_dir) == slurp(dir / "summary.txt"));
  std::filesystem::remove_all(c.output_dir);
}
