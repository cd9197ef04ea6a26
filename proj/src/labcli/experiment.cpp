#include "tghcp/labcli/experiment.hpp"

#include "tghcp/errors.hpp"
#include "tghcp/flowsim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

namespace tghcp::lab {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream(std::uint64_t seed, std::uint64_t tag) { return mix(seed ^ mix(tag)); }

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

randfield::CovarianceSpec ProblemSetup::covariance() const {
  randfield::CovarianceSpec c;
  c.variance = log_k_variance;
  c.correlation_length = correlation_length;
  c.domain_x = grid.length_x();
  c.domain_y = grid.length_y();
  c.nx = grid.nx;
  c.ny = grid.ny;
  return c;
}

void ProblemSetup::validate() const {
  grid.validate();
  boundary.validate();
  covariance().validate();
  if (kle_terms < 1 || kle_terms > grid.cells()) throw ConfigError("KLE term count must lie in [1, cells]");
  if (observation_horizon < 1 || observation_horizon > grid.nt) {
    throw ConfigError("observation horizon must lie in [1, nt]");
  }
}

SampleCounts SampleCounts::with_per_step(int per_step, int horizon) {
  SampleCounts c;
  c.observations = per_step * horizon;
  return c;
}

int SampleCounts::observations_at(int t, int horizon) const {
  if (t < 1 || t > horizon) return 0;
  const int base = observations / horizon;
  return base + (t <= observations % horizon ? 1 : 0);
}

GeneratedProblem generate_problem(const ProblemSetup& setup, const randfield::KleBasis& basis, std::uint64_t seed,
                                  const SampleCounts& counts) {
  setup.validate();
  const flow::GridSpec& g = setup.grid;
  const flow::BoundarySpec& bc = setup.boundary;
  const int horizon = setup.observation_horizon;
  if (counts.observations < 0 || counts.collocation < 0 || counts.boundary_per_edge < 0 || counts.initial < 0) {
    throw ValidationError("sample counts must be non-negative");
  }
  if (counts.observations_at(1, horizon) > g.cells()) {
    throw ValidationError("observations per step exceed the " + std::to_string(g.cells()) + " grid cells");
  }
  if (counts.initial > g.cells()) throw ValidationError("initial samples exceed the grid cells");
  if (basis.spec.nx != g.nx || basis.spec.ny != g.ny) throw ValidationError("KLE basis does not match the grid");

  std::vector<int> free_cells;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!bc.pinned(g, i, j)) free_cells.push_back(g.cell(i, j));
  if (static_cast<long long>(counts.collocation) > static_cast<long long>(free_cells.size()) * g.nt) {
    throw ValidationError("collocation count exceeds the available patch centres");
  }

  GeneratedProblem out;
  out.field = randfield::sample_field(basis, stream(seed, 1));
  out.truth = flow::simulate(out.field, g, bc);
  const train::Normalization norm = train::Normalization::for_problem(g, bc);

  train::TrainingDataset& d = out.dataset;
  d.seed = seed;
  d.observation_horizon = horizon;

  std::mt19937_64 obs_rng(stream(seed, 2));
  std::vector<int> all(static_cast<std::size_t>(g.cells()));
  std::iota(all.begin(), all.end(), 0);
  for (int t = 1; t <= horizon; ++t) {
    const int n = counts.observations_at(t, horizon);
    if (n == 0) continue;
    std::vector<int> pick = all;
    std::shuffle(pick.begin(), pick.end(), obs_rng);
    for (int k = 0; k < n; ++k) {
      const int p = pick[static_cast<std::size_t>(k)];
      const int i = p % g.nx;
      const int j = p / g.nx;
      d.observations.push_back({{i, j, t}, norm.normalize_head(out.truth.at(t, j, i))});
    }
  }

  std::mt19937_64 col_rng(stream(seed, 3));
  std::set<std::tuple<int, int, int>> seen;
  while (static_cast<int>(d.collocation.size()) < counts.collocation) {
    const int p = free_cells[static_cast<std::size_t>(uniform_int(col_rng, 0, static_cast<int>(free_cells.size()) - 1))];
    const int t = uniform_int(col_rng, 1, g.nt);
    if (!seen.emplace(p, t, 0).second) continue;
    d.collocation.push_back({p % g.nx, p / g.nx, t});
  }

  std::mt19937_64 bc_rng(stream(seed, 4));
  for (flow::Edge e : flow::kEdges) {
    const flow::EdgeSpec& spec = bc.edge(e);
    const bool along_x = e == flow::Edge::YMin || e == flow::Edge::YMax;
    for (int k = 0; k < counts.boundary_per_edge; ++k) {
      const int s = uniform_int(bc_rng, 0, (along_x ? g.nx : g.ny) - 1);
      const int t = uniform_int(bc_rng, 1, g.nt);
      int i = 0, j = 0, di = 0, dj = 0;
      switch (e) {
        case flow::Edge::XMin: i = 0; j = s; di = 1; break;
        case flow::Edge::XMax: i = g.nx - 1; j = s; di = -1; break;
        case flow::Edge::YMin: i = s; j = 0; dj = 1; break;
        case flow::Edge::YMax: i = s; j = g.ny - 1; dj = -1; break;
      }
      train::BoundarySample b;
      b.cell = {i, j, t};
      double pinned_head = 0.0;
      if (spec.condition == flow::EdgeCondition::Dirichlet) {
        b.kind = train::BoundaryKind::Dirichlet;
        b.label = norm.normalize_head(spec.head);
      } else if (bc.pinned(g, i, j, &pinned_head)) {
        // Corner owned by a Dirichlet edge.
        b.kind = train::BoundaryKind::Dirichlet;
        b.label = norm.normalize_head(pinned_head);
      } else {
        b.kind = train::BoundaryKind::NoFlow;
        b.inner = {i + di, j + dj, t};
      }
      d.boundary.push_back(b);
    }
  }

  std::mt19937_64 ic_rng(stream(seed, 5));
  std::vector<int> pick = all;
  std::shuffle(pick.begin(), pick.end(), ic_rng);
  for (int k = 0; k < counts.initial; ++k) {
    const int p = pick[static_cast<std::size_t>(k)];
    const int i = p % g.nx;
    const int j = p / g.nx;
    d.initial.push_back({{i, j, 0}, norm.normalize_head(bc.initial_value(g, i, j))});
  }
  d.validate(g);
  return out;
}

namespace {

void check_shapes(const flow::HeadField& a, const flow::HeadField& b) {
  if (a.nt() != b.nt() || a.ny() != b.ny() || a.nx() != b.nx()) {
    throw ValidationError("head fields differ in shape");
  }
}

}  // namespace

double relative_l2(const flow::HeadField& prediction, const flow::HeadField& truth) {
  check_shapes(prediction, truth);
  double diff = 0.0, ref = 0.0;
  const auto& p = prediction.values();
  const auto& q = truth.values();
  for (std::size_t k = 0; k < q.size(); ++k) {
    diff += (p[k] - q[k]) * (p[k] - q[k]);
    ref += q[k] * q[k];
  }
  if (ref == 0.0) throw NumericError("relative L2 of a zero-norm truth");
  return std::sqrt(diff / ref);
}

double normalized_relative_l2(const flow::HeadField& prediction, const flow::HeadField& truth,
                              const train::Normalization& norm, int first, int last) {
  check_shapes(prediction, truth);
  if (first < 0 || last > truth.nt() || first > last) throw ValidationError("step range outside the head field");
  double diff = 0.0, ref = 0.0;
  for (int t = first; t <= last; ++t) {
    for (int j = 0; j < truth.ny(); ++j) {
      for (int i = 0; i < truth.nx(); ++i) {
        const double u = norm.normalize_head(truth.at(t, j, i));
        const double v = norm.normalize_head(prediction.at(t, j, i));
        diff += (v - u) * (v - u);
        ref += u * u;
      }
    }
  }
  if (ref == 0.0) throw NumericError("relative L2 of a zero-norm truth");
  return std::sqrt(diff / ref);
}

std::vector<double> normalized_relative_l2_per_step(const flow::HeadField& prediction, const flow::HeadField& truth,
                                                    const train::Normalization& norm) {
  std::vector<double> out;
  for (int t = 0; t <= truth.nt(); ++t) out.push_back(normalized_relative_l2(prediction, truth, norm, t, t));
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("line fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) throw ValidationError("line fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

std::vector<BenchRow> bench_inference_vs_simulation(const train::SurrogateModel& model,
                                                    const randfield::ConductivityField& field,
                                                    const flow::BoundarySpec& boundary, const std::vector<int>& steps,
                                                    int repeats) {
  using clock = std::chrono::steady_clock;
  if (repeats < 1) throw ConfigError("bench repeats must be positive");
  flow::GridSpec g = model.grid;
  g.nt = std::max(g.nt, steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end()));
  const std::vector<double> sim = flow::timing_profile(field, g, boundary, steps);

  // Warm-up so the first timed slice does not pay for page faults.
  volatile double sink = predict_field(model, 0)[0];
  std::vector<BenchRow> rows;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    double best = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const auto start = clock::now();
      sink = sink + predict_field(model, steps[s])[0];
      const double secs = std::chrono::duration<double>(clock::now() - start).count();
      best = r == 0 ? secs : std::min(best, secs);
    }
    rows.push_back({steps[s], sim[s], best});
  }
  return rows;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "step,simulation_seconds,inference_seconds\n" << std::setprecision(9);
  for (const BenchRow& r : rows) out << r.step << ',' << r.simulation_seconds << ',' << r.inference_seconds << '\n';
}

}  // namespace tghcp::lab
