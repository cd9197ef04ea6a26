#include "tghcp/labcli/sweep.hpp"

#include "tghcp/errors.hpp"
#include "tghcp/tgtrain/losses.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tghcp::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

json edge_json(const flow::EdgeSpec& e) {
  if (e.condition == flow::EdgeCondition::Dirichlet) return {{"type", "dirichlet"}, {"head", e.head}};
  return {{"type", "noflow"}};
}

flow::EdgeSpec edge_from(const json& j) {
  const std::string type = lower(j.at("type").get<std::string>());
  if (type == "dirichlet") return {flow::EdgeCondition::Dirichlet, j.at("head").get<double>()};
  if (type == "noflow" || type == "no-flow") return {flow::EdgeCondition::NoFlow, 0.0};
  throw ConfigError("unknown edge type '" + type + "'");
}

}  // namespace

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::Collocation: return "collocation";
    case SweepAxis::Boundary: return "boundary";
    case SweepAxis::Observation: return "observation";
    case SweepAxis::Noise: return "noise";
    case SweepAxis::Outlier: return "outlier";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& name) {
  const std::string n = lower(name);
  for (SweepAxis a : {SweepAxis::Collocation, SweepAxis::Boundary, SweepAxis::Observation, SweepAxis::Noise,
                      SweepAxis::Outlier}) {
    if (n == axis_name(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::vector<double> default_axis_values(SweepAxis a) {
  switch (a) {
    case SweepAxis::Collocation: return {40, 70, 90, 100, 180, 400, 700, 1000, 1800};
    case SweepAxis::Boundary: return {1, 4, 7, 10, 100, 400, 700, 1000, 10000};
    case SweepAxis::Observation: return {0, 32, 76, 108, 144, 180, 900, 1800};
    case SweepAxis::Noise: return {1, 10, 20, 40, 60};
    case SweepAxis::Outlier: return {1, 4, 7, 10};
  }
  return {};
}

void ExperimentConfig::validate() const {
  if (values.empty()) throw ConfigError("sweep value list is empty");
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (variants.empty()) throw ConfigError("no model variants selected");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("sweep values must be finite and non-negative");
    if ((axis == SweepAxis::Collocation || axis == SweepAxis::Boundary || axis == SweepAxis::Observation) &&
        v != std::floor(v)) {
      throw ConfigError(std::string("the ") + axis_name(axis) + " axis takes integer counts");
    }
    if (axis == SweepAxis::Outlier && v > 100.0) throw ConfigError("outlier percentage above 100");
  }
  setup.validate();
  if (training.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (training.batch_size < 1) throw ConfigError("batch size must be positive");
  training.weights.validate();
  if (pde_scale && !(*pde_scale > 0.0)) throw ConfigError("pde_scale must be positive");
}

ExperimentConfig experiment_from_json(const json& j) {
  try {
    ExperimentConfig c;
    if (j.contains("axis")) c.axis = parse_axis(j.at("axis").get<std::string>());
    c.values = j.contains("values") ? j.at("values").get<std::vector<double>>() : default_axis_values(c.axis);
    c.repeats = j.value("repeats", c.repeats);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(train::parse_variant(v.get<std::string>()));
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      flow::GridSpec& s = c.setup.grid;
      s.nx = g.value("nx", s.nx);
      s.ny = g.value("ny", s.ny);
      s.dx = g.value("dx", s.dx);
      s.dy = g.value("dy", s.dy);
      s.dt = g.value("dt", s.dt);
      s.nt = g.value("nt", s.nt);
      s.specific_storage = g.value("specific_storage", s.specific_storage);
    }
    if (j.contains("boundary")) {
      const json& b = j.at("boundary");
      for (flow::Edge e : flow::kEdges) {
        if (b.contains(flow::edge_name(e))) c.setup.boundary.edge(e) = edge_from(b.at(flow::edge_name(e)));
      }
      c.setup.boundary.initial_head = b.value("initial_head", c.setup.boundary.initial_head);
    }
    if (j.contains("field")) {
      const json& f = j.at("field");
      c.setup.log_k_variance = f.value("variance", c.setup.log_k_variance);
      c.setup.correlation_length = f.value("correlation_length", c.setup.correlation_length);
      c.setup.kle_terms = f.value("terms", c.setup.kle_terms);
    }
    c.setup.observation_horizon = j.value("observation_horizon", c.setup.observation_horizon);
    if (j.contains("counts")) {
      const json& n = j.at("counts");
      c.counts.observations = n.value("observations", c.counts.observations);
      c.counts.collocation = n.value("collocation", c.counts.collocation);
      c.counts.boundary_per_edge = n.value("boundary_per_edge", c.counts.boundary_per_edge);
      c.counts.initial = n.value("initial", c.counts.initial);
    }
    c.noise_percent = j.value("noise_percent", c.noise_percent);
    c.outlier_percent = j.value("outlier_percent", c.outlier_percent);
    if (j.contains("training")) {
      const json& t = j.at("training");
      train::TrainConfig& tc = c.training;
      tc.epochs = t.value("epochs", tc.epochs);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.adam.learning_rate = t.value("learning_rate", tc.adam.learning_rate);
      tc.hidden = t.value("hidden", tc.hidden);
      if (t.contains("weights")) {
        const json& w = t.at("weights");
        tc.weights.data = w.value("data", tc.weights.data);
        tc.weights.pde = w.value("pde", tc.weights.pde);
        tc.weights.bc = w.value("bc", tc.weights.bc);
        tc.weights.ic = w.value("ic", tc.weights.ic);
      }
      if (t.contains("pde_scale")) c.pde_scale = t.at("pde_scale").get<double>();
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

json experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["axis"] = axis_name(c.axis);
  j["values"] = c.values;
  j["repeats"] = c.repeats;
  j["master_seed"] = c.master_seed;
  j["variants"] = json::array();
  for (train::Variant v : c.variants) j["variants"].push_back(train::variant_name(v));
  const flow::GridSpec& g = c.setup.grid;
  j["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}, {"dt", g.dt}, {"nt", g.nt},
               {"specific_storage", g.specific_storage}};
  json b;
  for (flow::Edge e : flow::kEdges) b[flow::edge_name(e)] = edge_json(c.setup.boundary.edge(e));
  b["initial_head"] = c.setup.boundary.initial_head;
  j["boundary"] = b;
  j["field"] = {{"variance", c.setup.log_k_variance},
                {"correlation_length", c.setup.correlation_length},
                {"terms", c.setup.kle_terms}};
  j["observation_horizon"] = c.setup.observation_horizon;
  j["counts"] = {{"observations", c.counts.observations},
                 {"collocation", c.counts.collocation},
                 {"boundary_per_edge", c.counts.boundary_per_edge},
                 {"initial", c.counts.initial}};
  j["noise_percent"] = c.noise_percent;
  j["outlier_percent"] = c.outlier_percent;
  const train::TrainConfig& t = c.training;
  j["training"] = {{"epochs", t.epochs},
                   {"batch_size", t.batch_size},
                   {"learning_rate", t.adam.learning_rate},
                   {"hidden", t.hidden},
                   {"weights", {{"data", t.weights.data}, {"pde", t.weights.pde}, {"bc", t.weights.bc},
                                {"ic", t.weights.ic}}}};
  if (c.pde_scale) j["training"]["pde_scale"] = *c.pde_scale;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return experiment_from_json(j);
}

std::uint64_t derive_seed(std::uint64_t master, double value, int repeat, std::uint64_t tag) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, sizeof(bits));
  std::uint64_t s = mix(master);
  s = mix(s ^ bits);
  s = mix(s ^ static_cast<std::uint64_t>(repeat));
  return mix(s ^ tag);
}

CellPlan plan_cell(const ExperimentConfig& c, double value, int repeat) {
  CellPlan p;
  p.value = value;
  p.repeat = repeat;
  p.counts = c.counts;
  double noise = c.noise_percent;
  double outliers = c.outlier_percent;
  switch (c.axis) {
    case SweepAxis::Collocation: p.counts.collocation = static_cast<int>(value); break;
    case SweepAxis::Boundary: p.counts.boundary_per_edge = static_cast<int>(value); break;
    case SweepAxis::Observation: p.counts.observations = static_cast<int>(value); break;
    case SweepAxis::Noise: noise = value; break;
    case SweepAxis::Outlier: outliers = value; break;
  }
  p.dataset_seed = derive_seed(c.master_seed, value, repeat, 1);
  p.training_seed = derive_seed(c.master_seed, value, repeat, 2);
  p.corruption.noise_level = noise / 100.0;
  p.corruption.outlier_fraction = outliers / 100.0;
  p.corruption.seed = derive_seed(c.master_seed, value, repeat, 3);
  return p;
}

RunOutcome run_variant(const ExperimentConfig& c, const GeneratedProblem& problem, const CellPlan& plan,
                       train::Variant variant) {
  using clock = std::chrono::steady_clock;
  RunOutcome out;
  MetricsRecord& r = out.record;
  r.axis_value = plan.value;
  r.variant = variant;
  r.repeat = plan.repeat;
  r.seed = plan.training_seed;

  train::ConstraintContext ctx = train::make_context(problem.field, c.setup.grid, c.setup.boundary);
  if (c.pde_scale) ctx.pde_scale = *c.pde_scale;
  train::TrainConfig tc = c.training;
  tc.variant = variant;
  tc.seed = plan.training_seed;

  const auto start = clock::now();
  out.result = train::train(problem.dataset, ctx, tc);
  r.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  if (!out.result.history.records.empty()) r.final_loss = out.result.history.records.back().total;

  const flow::HeadField pred = train::predict_all(out.result.model);
  const int nt = c.setup.grid.nt;
  r.relative_l2 = normalized_relative_l2(pred, problem.truth, ctx.norm, 1, nt);
  flow::HeadField p1(nt - 1, pred.ny(), pred.nx()), t1(nt - 1, pred.ny(), pred.nx());
  const std::size_t slice = static_cast<std::size_t>(pred.ny()) * pred.nx();
  std::copy(pred.values().begin() + static_cast<std::ptrdiff_t>(slice), pred.values().end(), p1.values().begin());
  std::copy(problem.truth.values().begin() + static_cast<std::ptrdiff_t>(slice), problem.truth.values().end(),
            t1.values().begin());
  r.raw_relative_l2 = relative_l2(p1, t1);
  r.per_step = normalized_relative_l2_per_step(pred, problem.truth, ctx.norm);
  return out;
}

std::vector<MetricsRecord> run_sweep(const ExperimentConfig& c, const SweepProgress& progress) {
  c.validate();
  const fs::path dir(c.output_dir);
  fs::create_directories(dir / "histories");
  {
    std::ofstream cfg(dir / "config.json");
    if (!cfg) throw IoError("cannot write " + (dir / "config.json").string());
    cfg << experiment_to_json(c).dump(2) << '\n';
  }
  const randfield::KleBasis basis = randfield::build_basis(c.setup.covariance(), c.setup.kle_terms);

  std::vector<MetricsRecord> records;
  for (double value : c.values) {
    for (int rep = 0; rep < c.repeats; ++rep) {
      const CellPlan plan = plan_cell(c, value, rep);
      std::optional<GeneratedProblem> problem;
      std::string cell_error;
      try {
        problem = generate_problem(c.setup, basis, plan.dataset_seed, plan.counts);
        problem->dataset = train::corrupt(std::move(problem->dataset), plan.corruption);
      } catch (const std::exception& e) {
        cell_error = e.what();
      }
      for (train::Variant v : c.variants) {
        MetricsRecord rec;
        if (problem) {
          try {
            RunOutcome run = run_variant(c, *problem, plan, v);
            rec = std::move(run.record);
            std::ostringstream name;
            name << "loss_" << number(value) << '_' << train::variant_name(v) << '_' << rep << ".csv";
            run.result.history.save_csv((dir / "histories" / name.str()).string());
          } catch (const std::exception& e) {
            rec.error = e.what();
          }
        } else {
          rec.error = cell_error;
        }
        rec.axis_value = value;
        rec.variant = v;
        rec.repeat = rep;
        if (!rec.ok()) rec.seed = plan.training_seed;
        records.push_back(rec);
        if (progress) progress(rec);
      }
      write_records_csv((dir / "records.csv").string(), records);
    }
  }

  {
    std::ofstream ps(dir / "per_step.csv");
    ps << "axis_value,variant,repeat,step,relative_l2\n" << std::setprecision(10);
    for (const MetricsRecord& r : records) {
      for (std::size_t t = 0; t < r.per_step.size(); ++t) {
        ps << number(r.axis_value) << ',' << train::variant_name(r.variant) << ',' << r.repeat << ',' << t << ','
           << r.per_step[t] << '\n';
      }
    }
  }
  const auto rows = summarize(records, c.values, c.variants);
  write_summary_csv((dir / "summary.csv").string(), rows);
  std::ofstream txt(dir / "summary.txt");
  txt << format_table(c.axis, rows, c.values, c.variants);
  return records;
}

void write_records_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "axis_value,variant,repeat,relative_l2,raw_relative_l2,final_loss,wall_seconds,seed,error\n";
  out << std::setprecision(12);
  for (const MetricsRecord& r : records) {
    out << number(r.axis_value) << ',' << train::variant_name(r.variant) << ',' << r.repeat << ',' << r.relative_l2
        << ',' << r.raw_relative_l2 << ',' << r.final_loss << ',' << r.wall_seconds << ',' << r.seed << ','
        << clean(r.error) << '\n';
  }
}

std::vector<MetricsRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<MetricsRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw ValidationError(path + ":" + std::to_string(line_no) + ": expected 9 fields");
    try {
      MetricsRecord r;
      r.axis_value = std::stod(f[0]);
      r.variant = train::parse_variant(f[1]);
      r.repeat = std::stoi(f[2]);
      r.relative_l2 = std::stod(f[3]);
      r.raw_relative_l2 = std::stod(f[4]);
      r.final_loss = std::stod(f[5]);
      r.wall_seconds = std::stod(f[6]);
      r.seed = std::stoull(f[7]);
      r.error = f[8];
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed record");
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records, const std::vector<double>& values,
                                  const std::vector<train::Variant>& variants) {
  std::vector<SummaryRow> rows;
  for (double value : values) {
    for (train::Variant v : variants) {
      std::vector<double> xs;
      for (const MetricsRecord& r : records)
        if (r.ok() && r.axis_value == value && r.variant == v) xs.push_back(r.relative_l2);
      SummaryRow row;
      row.axis_value = value;
      row.variant = v;
      row.count = static_cast<int>(xs.size());
      if (!xs.empty()) {
        const double n = static_cast<double>(xs.size());
        double sum = 0.0;
        for (double x : xs) sum += x;
        row.mean = sum / n;
        if (xs.size() > 1) {
          double ss = 0.0;
          for (double x : xs) ss += (x - row.mean) * (x - row.mean);
          row.std = std::sqrt(ss / (n - 1.0));
        }
        std::sort(xs.begin(), xs.end());
        const std::size_t m = xs.size() / 2;
        row.median = xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "axis_value,variant,count,mean,std,median\n" << std::setprecision(10);
  for (const SummaryRow& r : rows) {
    out << number(r.axis_value) << ',' << train::variant_name(r.variant) << ',' << r.count << ',';
    if (r.count > 0) out << r.mean << ',' << r.std << ',' << r.median << '\n';
    else out << ",,\n";
  }
}

std::string format_table(SweepAxis axis, const std::vector<SummaryRow>& rows, const std::vector<double>& values,
                         const std::vector<train::Variant>& variants) {
  std::ostringstream os;
  os << std::left << std::setw(14) << axis_name(axis);
  for (train::Variant v : variants) os << std::setw(16) << train::variant_name(v);
  os << '\n';
  for (double value : values) {
    std::string label = number(value);
    if (axis == SweepAxis::Noise || axis == SweepAxis::Outlier) label += "%";
    os << std::setw(14) << label;
    for (train::Variant v : variants) {
      std::string cell = "n/a";
      for (const SummaryRow& r : rows) {
        if (r.axis_value == value && r.variant == v && r.count > 0) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.3f±%.3f", r.mean, r.std);
          cell = buf;
        }
      }
      os << std::setw(16) << cell;
    }
    os << '\n';
  }
  return os.str();
}

std::string report(const std::string& output_dir) {
  const fs::path dir(output_dir);
  const std::vector<MetricsRecord> records = read_records_csv((dir / "records.csv").string());
  ExperimentConfig c;
  std::vector<double> values;
  std::vector<train::Variant> variants;
  if (fs::exists(dir / "config.json")) {
    c = load_experiment_config((dir / "config.json").string());
    values = c.values;
    variants = c.variants;
  } else {
    for (const MetricsRecord& r : records) {
      if (std::find(values.begin(), values.end(), r.axis_value) == values.end()) values.push_back(r.axis_value);
      if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    }
  }
  const auto rows = summarize(records, values, variants);
  write_summary_csv((dir / "summary.csv").string(), rows);
  const std::string table = format_table(c.axis, rows, values, variants);
  std::ofstream txt(dir / "summary.txt");
  txt << table;
  return table;
}

}  // namespace tghcp::lab
