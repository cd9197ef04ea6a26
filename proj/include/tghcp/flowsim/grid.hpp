#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tghcp::flow {

/// Uniform cell-centred space-time grid. Cell (i, j) has its centre at
/// ((i + 0.5) dx, (j + 0.5) dy); time index t sits at t * dt, with t = 0 the
/// initial condition.
struct GridSpec {
  int nx = 51;
  int ny = 51;
  double dx = 20.0;
  double dy = 20.0;
  double dt = 0.2;
  int nt = 50;
  double specific_storage = 1e-4;

  double length_x() const { return nx * dx; }
  double length_y() const { return ny * dy; }
  double duration() const { return nt * dt; }
  double x_center(int i) const { return (i + 0.5) * dx; }
  double y_center(int j) const { return (j + 0.5) * dy; }
  double time(int t) const { return t * dt; }
  /// S_s / dt, the storage coefficient of the backward-Euler stencil.
  double storage_coefficient() const { return specific_storage / dt; }
  int cells() const { return nx * ny; }
  int cell(int i, int j) const { return j * nx + i; }
  bool contains(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
  void validate() const;
};

enum class Edge { XMin = 0, XMax = 1, YMin = 2, YMax = 3 };
inline constexpr std::array<Edge, 4> kEdges{Edge::XMin, Edge::XMax, Edge::YMin, Edge::YMax};
const char* edge_name(Edge e);

enum class EdgeCondition { Dirichlet, NoFlow };

struct EdgeSpec {
  EdgeCondition condition = EdgeCondition::NoFlow;
  double head = 0.0;  // used by Dirichlet edges only
};

/// One condition per edge plus a uniform initial head; Dirichlet edge cells
/// hold their fixed head from t = 0 on.
struct BoundarySpec {
  std::array<EdgeSpec, 4> edges{EdgeSpec{EdgeCondition::Dirichlet, 202.0},
                                EdgeSpec{EdgeCondition::Dirichlet, 200.0},
                                EdgeSpec{EdgeCondition::NoFlow, 0.0},
                                EdgeSpec{EdgeCondition::NoFlow, 0.0}};
  double initial_head = 200.0;

  const EdgeSpec& edge(Edge e) const { return edges[static_cast<std::size_t>(e)]; }
  EdgeSpec& edge(Edge e) { return edges[static_cast<std::size_t>(e)]; }

  /// Fixed head of cell (i, j) if it lies on a Dirichlet edge. Corner cells
  /// take the first Dirichlet edge in XMin, XMax, YMin, YMax order.
  bool pinned(const GridSpec& grid, int i, int j, double* head = nullptr) const;
  double initial_value(const GridSpec& grid, int i, int j) const;
  /// Smallest and largest head among Dirichlet values and the initial head.
  double min_head() const;
  double max_head() const;
  void validate() const;
};

/// Space-time head tensor indexed (t, j, i), t = 0..nt.
class HeadField {
 public:
  HeadField() = default;
  HeadField(int nt, int ny, int nx, double fill = 0.0);

  int nt() const { return nt_; }
  int ny() const { return ny_; }
  int nx() const { return nx_; }

  double& at(int t, int j, int i) { return values_[index(t, j, i)]; }
  double at(int t, int j, int i) const { return values_[index(t, j, i)]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* slice(int t) { return values_.data() + index(t, 0, 0); }
  const double* slice(int t) const { return values_.data() + index(t, 0, 0); }

 private:
  std::size_t index(int t, int j, int i) const {
    return (static_cast<std::size_t>(t) * ny_ + j) * nx_ + i;
  }

  int nt_ = 0;
  int ny_ = 0;
  int nx_ = 0;
  std::vector<double> values_;
};

/// JSON tensor file with header (nt, ny, nx, dt, dx, dy, boundary values).
void save_head_field(const std::string& path, const HeadField& h, const GridSpec& grid,
                     const BoundarySpec& boundary, std::optional<std::uint64_t> seed = std::nullopt);
HeadField load_head_field(const std::string& path);

}  // namespace tghcp::flow
