#pragma once

#include "viscmod/common.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace viscmod {

enum class DomainKind { Periodic, Truncated };

inline const char* to_string(DomainKind k) {
  return k == DomainKind::Periodic ? "periodic" : "truncated";
}

inline constexpr int kMinPointsPerAxis = 4;

/// Uniform Cartesian grid description.
///
/// Periodic grids sample the torus [0, L)^n at x_i = i L / N. Truncated grids
/// sample the closed box [-R, R]^n including both faces, so the outermost
/// ring of points lies on |x_j| = R; that ring is the zero clamp set.
struct GridSpec {
  int dim = 1;
  DomainKind kind = DomainKind::Periodic;
  double extent = 2.0 * M_PI;  // L (periodic) or R (truncated)
  int points_per_axis = 64;
  double eps_decay = 1e-3;  // truncated only

  static GridSpec periodic(int dim, double period, int n) {
    return GridSpec{dim, DomainKind::Periodic, period, n, 1e-3};
  }
  static GridSpec truncated(int dim, double half_width, int n, double eps_decay = 1e-3) {
    return GridSpec{dim, DomainKind::Truncated, half_width, n, eps_decay};
  }

  double spacing() const {
    return kind == DomainKind::Periodic ? extent / points_per_axis
                                        : 2.0 * extent / (points_per_axis - 1);
  }

  /// Diameter of the repeating region (periodic) or of the box (truncated).
  double default_diameter() const {
    return kind == DomainKind::Periodic ? extent * std::sqrt(double(dim))
                                        : 2.0 * extent * std::sqrt(double(dim));
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    if (points_per_axis < kMinPointsPerAxis)
      throw ConfigError("grid needs at least " + std::to_string(kMinPointsPerAxis) +
                        " points per axis");
    if (!(extent > 0.0) || !std::isfinite(extent))
      throw ConfigError("grid extent (L or R) must be positive");
    if (kind == DomainKind::Truncated && !(eps_decay > 0.0))
      throw ConfigError("truncated grid needs eps_decay > 0");
  }
};

using Point = std::array<double, 2>;

/// Enumerable point set with index/coordinate maps and the domain metric.
class Grid {
 public:
  explicit Grid(GridSpec spec) : spec_(spec) {
    spec_.validate();
    h_ = spec_.spacing();
    n_ = spec_.points_per_axis;
    size_ = spec_.dim == 1 ? std::size_t(n_) : std::size_t(n_) * std::size_t(n_);
  }

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int per_axis() const { return n_; }
  double spacing() const { return h_; }
  std::size_t size() const { return size_; }
  DomainKind kind() const { return spec_.kind; }
  bool periodic() const { return spec_.kind == DomainKind::Periodic; }

  std::array<int, 2> multi_index(std::size_t flat) const {
    if (spec_.dim == 1) return {int(flat), 0};
    return {int(flat % std::size_t(n_)), int(flat / std::size_t(n_))};
  }

  std::size_t flat_index(int i, int j = 0) const {
    return spec_.dim == 1 ? std::size_t(i) : std::size_t(j) * std::size_t(n_) + std::size_t(i);
  }

  double axis_coord(int i) const {
    return spec_.kind == DomainKind::Periodic ? i * h_ : -spec_.extent + i * h_;
  }

  Point point(std::size_t flat) const {
    auto [i, j] = multi_index(flat);
    return {axis_coord(i), spec_.dim == 2 ? axis_coord(j) : 0.0};
  }

  Vec point_vec(std::size_t flat) const {
    Point p = point(flat);
    Vec v(spec_.dim);
    for (int d = 0; d < spec_.dim; ++d) v(d) = p[d];
    return v;
  }

  /// Per-axis displacement b - a, reduced to the minimal image on the torus.
  double axis_delta(double a, double b) const {
    double d = b - a;
    if (spec_.kind == DomainKind::Periodic) {
      const double L = spec_.extent;
      d -= L * std::round(d / L);
    }
    return d;
  }

  double distance(const Point& a, const Point& b) const {
    double s = 0.0;
    for (int d = 0; d < spec_.dim; ++d) {
      double dd = axis_delta(a[d], b[d]);
      s += dd * dd;
    }
    return std::sqrt(s);
  }

  double distance(std::size_t a, std::size_t b) const { return distance(point(a), point(b)); }

  /// Distance for an index offset (di, dj); the metric on a uniform grid
  /// depends on the offset only.
  double offset_distance(int di, int dj) const {
    auto reduce = [&](int d) {
      if (spec_.kind != DomainKind::Periodic) return double(d);
      int m = ((d % n_) + n_) % n_;
      return double(std::min(m, n_ - m));
    };
    double a = reduce(di) * h_;
    double b = spec_.dim == 2 ? reduce(dj) * h_ : 0.0;
    return std::sqrt(a * a + b * b);
  }

  /// True on the outermost ring of a truncated grid.
  bool on_clamp_ring(std::size_t flat) const {
    if (spec_.kind != DomainKind::Truncated) return false;
    auto [i, j] = multi_index(flat);
    bool edge = i == 0 || i == n_ - 1;
    if (spec_.dim == 2) edge = edge || j == 0 || j == n_ - 1;
    return edge;
  }

  /// Distance from a truncated-grid point to the nearest clamp-ring point.
  double distance_to_clamp_ring(std::size_t flat) const {
    auto [i, j] = multi_index(flat);
    int steps = std::min(i, n_ - 1 - i);
    if (spec_.dim == 2) steps = std::min(steps, std::min(j, n_ - 1 - j));
    return steps * h_;
  }

  /// Largest distance realized between two grid points.
  double max_distance() const {
    if (spec_.kind == DomainKind::Periodic) return offset_distance(n_ / 2, spec_.dim == 2 ? n_ / 2 : 0);
    return offset_distance(n_ - 1, spec_.dim == 2 ? n_ - 1 : 0);
  }

 private:
  GridSpec spec_;
  double h_ = 0.0;
  int n_ = 0;
  std::size_t size_ = 0;
};

inline Grid make_grid(const GridSpec& spec) { return Grid(spec); }

/// Grid samples of a scalar function.
class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw DimensionMismatch("field has " + std::to_string(values_.size()) + " values, grid has " +
                              std::to_string(grid_.size()) + " points");
  }
  explicit ScalarField(Grid grid) : ScalarField(grid, std::vector<double>(grid.size(), 0.0)) {}

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  Grid grid_;
  std::vector<double> values_;
};

template <class Fn>
ScalarField sample_function(const Grid& grid, Fn&& g) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Point p = grid.point(k);
    v[k] = g(std::span<const double>(p.data(), std::size_t(grid.dim())));
  }
  return ScalarField(grid, std::move(v));
}

inline double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

inline void write_field_csv(std::ostream& os, const ScalarField& f) {
  const Grid& g = f.grid();
  os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  for (std::size_t k = 0; k < f.size(); ++k) {
    Point p = g.point(k);
    os << format_double(p[0]) << ',';
    if (g.dim() == 2) os << format_double(p[1]) << ',';
    os << format_double(f[k]) << '\n';
  }
}

}  // namespace viscmod
