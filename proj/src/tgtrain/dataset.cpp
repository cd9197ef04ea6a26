#include "tghcp/tgtrain/dataset.hpp"

#include "tghcp/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace tghcp::train {

namespace {

nlohmann::json cell_json(const CellIndex& c) { return {c.i, c.j, c.t}; }

CellIndex cell_from(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

}  // namespace

void TrainingDataset::validate(const flow::GridSpec& grid) const {
  for (const Observation& o : observations) {
    if (!grid.contains(o.cell.i, o.cell.j)) throw ValidationError("observation outside the grid");
    if (o.cell.t < 1 || o.cell.t > observation_horizon) {
      throw ValidationError("observation at t=" + std::to_string(o.cell.t) + " outside steps 1.." +
                            std::to_string(observation_horizon));
    }
    if (!std::isfinite(o.label)) throw ValidationError("non-finite observation label");
  }
  for (const CellIndex& c : collocation) {
    if (!grid.contains(c.i, c.j) || c.t < 1 || c.t > grid.nt) throw ValidationError("collocation centre off the grid");
  }
  for (const BoundarySample& b : boundary) {
    if (!grid.contains(b.cell.i, b.cell.j) || b.cell.t < 0 || b.cell.t > grid.nt) {
      throw ValidationError("boundary sample off the grid");
    }
    if (b.kind == BoundaryKind::NoFlow && !grid.contains(b.inner.i, b.inner.j)) {
      throw ValidationError("no-flow sample without an interior neighbour");
    }
  }
  for (const InitialSample& s : initial) {
    if (!grid.contains(s.cell.i, s.cell.j) || s.cell.t != 0) throw ValidationError("initial sample must sit at t=0");
  }
}

void CorruptionSpec::validate() const {
  if (!(noise_level >= 0.0)) throw ValidationError("noise level must be non-negative");
  if (!(outlier_fraction >= 0.0) || outlier_fraction > 1.0) {
    throw ValidationError("outlier fraction must lie in [0, 1]");
  }
}

TrainingDataset corrupt(TrainingDataset dataset, const CorruptionSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  if (spec.noise_level > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Observation& o : dataset.observations) o.label *= 1.0 + spec.noise_level * normal(rng);
  }
  const auto n = dataset.observations.size();
  const auto outliers = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(n)));
  if (outliers > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_real_distribution<double> uniform(1.0, 2.0);
    for (std::size_t k = 0; k < outliers; ++k) dataset.observations[order[k]].label = uniform(rng);
  }
  return dataset;
}

void save_dataset(const std::string& path, const TrainingDataset& d) {
  nlohmann::json j;
  j["header"] = {{"seed", d.seed}, {"observation_horizon", d.observation_horizon},
                 {"n_obs", d.observations.size()}, {"n_f", d.collocation.size()},
                 {"n_bc", d.boundary.size()}, {"n_ic", d.initial.size()}};
  auto& obs = j["observations"] = nlohmann::json::array();
  for (const Observation& o : d.observations) obs.push_back({{"cell", cell_json(o.cell)}, {"label", o.label}});
  auto& col = j["collocation"] = nlohmann::json::array();
  for (const CellIndex& c : d.collocation) col.push_back(cell_json(c));
  auto& bc = j["boundary"] = nlohmann::json::array();
  for (const BoundarySample& b : d.boundary) {
    nlohmann::json e = {{"cell", cell_json(b.cell)}, {"kind", b.kind == BoundaryKind::Dirichlet ? "dirichlet" : "noflow"}};
    if (b.kind == BoundaryKind::Dirichlet) e["label"] = b.label;
    else e["inner"] = cell_json(b.inner);
    bc.push_back(e);
  }
  auto& ic = j["initial"] = nlohmann::json::array();
  for (const InitialSample& s : d.initial) ic.push_back({{"cell", cell_json(s.cell)}, {"label", s.label}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump() << '\n';
}

TrainingDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    nlohmann::json j;
    in >> j;
    TrainingDataset d;
    d.seed = j.at("header").at("seed").get<std::uint64_t>();
    d.observation_horizon = j.at("header").at("observation_horizon").get<int>();
    for (const auto& o : j.at("observations")) d.observations.push_back({cell_from(o.at("cell")), o.at("label").get<double>()});
    for (const auto& c : j.at("collocation")) d.collocation.push_back(cell_from(c));
    for (const auto& b : j.at("boundary")) {
      BoundarySample s;
      s.cell = cell_from(b.at("cell"));
      if (b.at("kind").get<std::string>() == "dirichlet") {
        s.kind = BoundaryKind::Dirichlet;
        s.label = b.at("label").get<double>();
      } else {
        s.kind = BoundaryKind::NoFlow;
        s.inner = cell_from(b.at("inner"));
      }
      d.boundary.push_back(s);
    }
    for (const auto& s : j.at("initial")) d.initial.push_back({cell_from(s.at("cell")), s.at("label").get<double>()});
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace tghcp::train
