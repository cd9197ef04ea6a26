#include "tghcp/flowsim/grid.hpp"

#include "tghcp/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tghcp::flow {

void GridSpec::validate() const {
  if (nx < 3 || ny < 3) throw ValidationError("grid needs at least 3x3 cells");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ValidationError("cell sizes must be positive");
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  if (nt < 0) throw ValidationError("step count must be non-negative");
  if (!(specific_storage > 0.0)) throw ValidationError("specific storage must be positive");
}

const char* edge_name(Edge e) {
  switch (e) {
    case Edge::XMin: return "xmin";
    case Edge::XMax: return "xmax";
    case Edge::YMin: return "ymin";
    case Edge::YMax: return "ymax";
  }
  return "?";
}

bool BoundarySpec::pinned(const GridSpec& grid, int i, int j, double* head) const {
  const bool on_edge[4] = {i == 0, i == grid.nx - 1, j == 0, j == grid.ny - 1};
  for (Edge e : kEdges) {
    const EdgeSpec& s = edge(e);
    if (on_edge[static_cast<int>(e)] && s.condition == EdgeCondition::Dirichlet) {
      if (head) *head = s.head;
      return true;
    }
  }
  return false;
}

double BoundarySpec::initial_value(const GridSpec& grid, int i, int j) const {
  double h = initial_head;
  pinned(grid, i, j, &h);
  return h;
}

double BoundarySpec::min_head() const {
  double m = initial_head;
  for (const EdgeSpec& e : edges)
    if (e.condition == EdgeCondition::Dirichlet) m = std::min(m, e.head);
  return m;
}

double BoundarySpec::max_head() const {
  double m = initial_head;
  for (const EdgeSpec& e : edges)
    if (e.condition == EdgeCondition::Dirichlet) m = std::max(m, e.head);
  return m;
}

void BoundarySpec::validate() const {
  if (!std::isfinite(initial_head)) throw ValidationError("initial head must be finite");
  for (const EdgeSpec& e : edges) {
    if (e.condition == EdgeCondition::Dirichlet && !std::isfinite(e.head)) {
      throw ValidationError("Dirichlet head must be finite");
    }
  }
}

HeadField::HeadField(int nt, int ny, int nx, double fill)
    : nt_(nt), ny_(ny), nx_(nx),
      values_(static_cast<std::size_t>(nt + 1) * static_cast<std::size_t>(ny) * nx, fill) {
  if (nt < 0 || ny <= 0 || nx <= 0) throw ValidationError("invalid head field shape");
}

void save_head_field(const std::string& path, const HeadField& h, const GridSpec& grid,
                     const BoundarySpec& boundary, std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  nlohmann::json edges = nlohmann::json::object();
  for (Edge e : kEdges) {
    const EdgeSpec& s = boundary.edge(e);
    edges[edge_name(e)] = s.condition == EdgeCondition::Dirichlet
                              ? nlohmann::json{{"type", "dirichlet"}, {"head", s.head}}
                              : nlohmann::json{{"type", "noflow"}};
  }
  j["header"] = {{"nt", h.nt()},     {"ny", h.ny()},   {"nx", h.nx()},
                 {"dt", grid.dt},    {"dx", grid.dx},  {"dy", grid.dy},
                 {"edges", edges},   {"initial_head", boundary.initial_head},
                 {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)}};
  j["values"] = h.values();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump() << '\n';
}

HeadField load_head_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    nlohmann::json j;
    in >> j;
    const auto& hd = j.at("header");
    HeadField h(hd.at("nt").get<int>(), hd.at("ny").get<int>(), hd.at("nx").get<int>());
    auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != h.values().size()) throw IoError(path + ": value count does not match header");
    h.values() = std::move(values);
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace tghcp::flow
