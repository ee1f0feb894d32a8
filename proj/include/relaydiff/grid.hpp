#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace relaydiff {

using Point = std::array<double, 2>;

/**
 * Uniform node-centred grid on [0, Lx] (1D) or [0, Lx] x [0, Ly] (2D).
 * Nodes sit on the boundary; node (i, j) has flat index i + nx * j.
 */
class Grid {
 public:
  Grid() : Grid(1, {1.0, 0.0}, {3, 1}) {}
  Grid(int dim, std::array<double, 2> extents, std::array<std::size_t, 2> counts);

  static Grid line(double length, std::size_t nodes) { return Grid(1, {length, 0.0}, {nodes, 1}); }
  static Grid rectangle(double lx, double ly, std::size_t nx, std::size_t ny) {
    return Grid(2, {lx, ly}, {nx, ny});
  }

  int dim() const noexcept { return dim_; }
  double extent(int axis) const { return extents_[axis]; }
  std::size_t count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t size() const noexcept { return counts_[0] * counts_[1]; }

  std::size_t index(std::size_t i, std::size_t j = 0) const noexcept { return i + counts_[0] * j; }
  Point coords(std::size_t node) const;

  /// Trapezoidal (dual-cell) quadrature weight of a node.
  double weight(std::size_t node) const;
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// True when `p` is at least one spacing away from every boundary face.
  bool is_interior(const Point& p) const;

  bool operator==(const Grid& other) const noexcept;

 private:
  int dim_;
  std::array<double, 2> extents_;
  std::array<std::size_t, 2> counts_;
  std::array<double, 2> spacing_;
  std::vector<double> weights_;
};

/// Nodal values of a scalar on a grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  Field(const Grid& g, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double max_abs() const;
  bool all_finite() const;
};

template <class Fn>
Field make_field(const Grid& g, Fn&& fn) {
  Field out(g);
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = fn(g.coords(n));
  return out;
}

/// Five-point (or three-point) Laplacian with ghost-node mirror reflection at
/// the boundary, giving a zero normal derivative to second order.
Field laplacian_neumann(const Field& field);

/// Applies the same stencil into a caller-owned buffer (hot path of the solvers).
void apply_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out);

/// Multilinear interpolation; requires `p` to be an interior point.
double sample_at(const Field& field, const Point& p);

/// Trapezoidal integral of |f|^p over the grid (p = 1 gives the L1 norm).
double integrate_abs_pow(const Grid& grid, std::span<const double> values, double p);

}  // namespace relaydiff
