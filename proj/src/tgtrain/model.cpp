#include "tghcp/tgtrain/model.hpp"

#include "tghcp/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>

namespace tghcp::train {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Ann: return "ann";
    case Variant::Soft: return "soft";
    case Variant::Hcp: return "hcp";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ann") return Variant::Ann;
  if (lower == "soft") return Variant::Soft;
  if (lower == "hcp") return Variant::Hcp;
  throw ConfigError("unknown model variant '" + name + "' (expected ann, soft or hcp)");
}

Normalization Normalization::for_problem(const flow::GridSpec& grid, const flow::BoundarySpec& boundary) {
  Normalization n;
  n.length_x = grid.length_x();
  n.length_y = grid.length_y();
  n.duration = grid.duration() > 0.0 ? grid.duration() : 1.0;
  n.head_shift = boundary.min_head();
  const double range = boundary.max_head() - boundary.min_head();
  n.head_scale = range > 0.0 ? range : 1.0;
  return n;
}

Eigen::Vector3d Normalization::input(double x, double y, double time) const {
  return {x / length_x, y / length_y, time / duration};
}

Eigen::Vector3d Normalization::input(const hcp::CellIndex& cell, const flow::GridSpec& grid) const {
  return input(grid.x_center(cell.i), grid.y_center(cell.j), grid.time(cell.t));
}

Eigen::MatrixXd SurrogateModel::inputs(const std::vector<hcp::CellIndex>& cells) const {
  Eigen::MatrixXd x(3, static_cast<Eigen::Index>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = norm.input(cells[c], grid);
  return x;
}

Eigen::VectorXd SurrogateModel::predict_normalized(const std::vector<hcp::CellIndex>& cells) const {
  if (cells.empty()) return {};
  return diff::evaluate(params, inputs(cells)).row(0).transpose();
}

std::vector<int> default_widths() { return {3, 50, 50, 50, 50, 50, 1}; }

std::vector<int> widths_with_hidden(const std::vector<int>& hidden) {
  std::vector<int> w{3};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  return w;
}

std::vector<double> predict_field(const SurrogateModel& model, int time_index) {
  const flow::GridSpec& g = model.grid;
  Eigen::MatrixXd x(3, g.cells());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) x.col(g.cell(i, j)) = model.norm.input(g.x_center(i), g.y_center(j), g.time(time_index));
  const Eigen::MatrixXd u = diff::evaluate(model.params, x);
  std::vector<double> h(static_cast<std::size_t>(g.cells()));
  for (int p = 0; p < g.cells(); ++p) h[static_cast<std::size_t>(p)] = model.norm.denormalize_head(u(0, p));
  return h;
}

flow::HeadField predict_all(const SurrogateModel& model) {
  const flow::GridSpec& g = model.grid;
  flow::HeadField out(g.nt, g.ny, g.nx);
  for (int t = 0; t <= g.nt; ++t) {
    const std::vector<double> slice = predict_field(model, t);
    std::copy(slice.begin(), slice.end(), out.slice(t));
  }
  return out;
}

void save_checkpoint(const std::string& path, const SurrogateModel& model) {
  nlohmann::json j;
  j["header"] = {{"seed", model.seed}};
  j["variant"] = variant_name(model.variant);
  j["widths"] = model.params.widths();
  j["parameters"] = model.params.flatten();
  j["normalization"] = {{"length_x", model.norm.length_x},
                        {"length_y", model.norm.length_y},
                        {"duration", model.norm.duration},
                        {"head_shift", model.norm.head_shift},
                        {"head_scale", model.norm.head_scale}};
  const flow::GridSpec& g = model.grid;
  j["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy},
               {"dt", g.dt}, {"nt", g.nt}, {"specific_storage", g.specific_storage}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << '\n';
}

SurrogateModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  try {
    nlohmann::json j;
    in >> j;
    SurrogateModel m;
    m.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("header")) m.seed = j.at("header").value("seed", std::uint64_t{0});
    m.params = diff::ParameterSet::zeros(j.at("widths").get<std::vector<int>>());
    m.params.assign(j.at("parameters").get<std::vector<double>>());
    const auto& n = j.at("normalization");
    m.norm.length_x = n.at("length_x").get<double>();
    m.norm.length_y = n.at("length_y").get<double>();
    m.norm.duration = n.at("duration").get<double>();
    m.norm.head_shift = n.at("head_shift").get<double>();
    m.norm.head_scale = n.at("head_scale").get<double>();
    const auto& g = j.at("grid");
    m.grid.nx = g.at("nx").get<int>();
    m.grid.ny = g.at("ny").get<int>();
    m.grid.dx = g.at("dx").get<double>();
    m.grid.dy = g.at("dy").get<double>();
    m.grid.dt = g.at("dt").get<double>();
    m.grid.nt = g.at("nt").get<int>();
    m.grid.specific_storage = g.at("specific_storage").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace tghcp::train
