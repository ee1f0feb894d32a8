#include "relaydiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

namespace {

double node_weight_1d(std::size_t i, std::size_t n, double h) {
  return (i == 0 || i + 1 == n) ? 0.5 * h : h;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid configuration (" << violations.size() << " violation"
           << (violations.size() == 1 ? "" : "s") << ")";
        for (const auto& v : violations) os << "\n  - " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}

Grid::Grid(int dim, std::array<double, 2> extents, std::array<std::size_t, 2> counts)
    : dim_(dim), extents_(extents), counts_(counts), spacing_{0.0, 0.0} {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (dim == 1) {
    counts_[1] = 1;
    extents_[1] = 0.0;
  }
  for (int a = 0; a < dim; ++a) {
    if (counts_[a] < 3)
      throw ConfigError("grid needs at least 3 nodes per axis (axis " + std::to_string(a) + ")");
    if (!(extents_[a] > 0.0) || !std::isfinite(extents_[a]))
      throw ConfigError("grid extent must be positive and finite (axis " + std::to_string(a) + ")");
    spacing_[a] = extents_[a] / static_cast<double>(counts_[a] - 1);
  }
  weights_.resize(size());
  for (std::size_t j = 0; j < counts_[1]; ++j) {
    const double wy = dim_ == 2 ? node_weight_1d(j, counts_[1], spacing_[1]) : 1.0;
    for (std::size_t i = 0; i < counts_[0]; ++i)
      weights_[index(i, j)] = node_weight_1d(i, counts_[0], spacing_[0]) * wy;
  }
}

Point Grid::coords(std::size_t node) const {
  const std::size_t i = node % counts_[0];
  const std::size_t j = node / counts_[0];
  return {static_cast<double>(i) * spacing_[0], dim_ == 2 ? static_cast<double>(j) * spacing_[1] : 0.0};
}

double Grid::weight(std::size_t node) const { return weights_[node]; }

bool Grid::is_interior(const Point& p) const {
  for (int a = 0; a < dim_; ++a) {
    const double slack = 1e-12 * spacing_[a];
    if (!std::isfinite(p[a])) return false;
    if (p[a] < spacing_[a] - slack || p[a] > extents_[a] - spacing_[a] + slack) return false;
  }
  return true;
}

bool Grid::operator==(const Grid& other) const noexcept {
  return dim_ == other.dim_ && counts_ == other.counts_ && extents_ == other.extents_;
}

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw PreconditionError("field has " + std::to_string(values.size()) + " values, grid has " +
                            std::to_string(grid.size()) + " nodes");
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

bool Field::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void apply_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out) {
  const std::size_t nx = grid.count(0);
  const std::size_t ny = grid.count(1);
  const double ihx2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
  // Mirror ghost: u[-1] = u[1], u[n] = u[n-2].
  auto left = [](std::size_t i) { return i == 0 ? 1 : i - 1; };
  auto right = [](std::size_t i, std::size_t n) { return i + 1 == n ? n - 2 : i + 1; };
  if (grid.dim() == 1) {
    for (std::size_t i = 0; i < nx; ++i)
      out[i] = (in[left(i)] - 2.0 * in[i] + in[right(i, nx)]) * ihx2;
    return;
  }
  const double ihy2 = 1.0 / (grid.spacing(1) * grid.spacing(1));
  for (std::size_t j = 0; j < ny; ++j) {
    const std::size_t jm = left(j), jp = right(j, ny);
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t c = i + nx * j;
      const double uc = in[c];
      out[c] = (in[left(i) + nx * j] - 2.0 * uc + in[right(i, nx) + nx * j]) * ihx2 +
               (in[i + nx * jm] - 2.0 * uc + in[i + nx * jp]) * ihy2;
    }
  }
}

Field laplacian_neumann(const Field& field) {
  Field out(field.grid);
  apply_laplacian(field.grid, field.values, out.values);
  return out;
}

double sample_at(const Field& field, const Point& p) {
  const Grid& g = field.grid;
  if (!g.is_interior(p)) {
    std::ostringstream os;
    os << "sample point (" << p[0];
    if (g.dim() == 2) os << ", " << p[1];
    os << ") is not strictly interior (needs one spacing of clearance from the boundary)";
    throw PreconditionError(os.str());
  }
  std::array<std::size_t, 2> lo{0, 0};
  std::array<double, 2> frac{0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const double s = p[a] / g.spacing(a);
    auto cell = static_cast<std::size_t>(std::floor(s));
    cell = std::min(cell, g.count(a) - 2);
    lo[a] = cell;
    frac[a] = s - static_cast<double>(cell);
  }
  if (g.dim() == 1) {
    const double u0 = field[lo[0]], u1 = field[lo[0] + 1];
    return u0 + frac[0] * (u1 - u0);
  }
  const double u00 = field[g.index(lo[0], lo[1])];
  const double u10 = field[g.index(lo[0] + 1, lo[1])];
  const double u01 = field[g.index(lo[0], lo[1] + 1)];
  const double u11 = field[g.index(lo[0] + 1, lo[1] + 1)];
  const double fx = frac[0], fy = frac[1];
  return (1 - fx) * (1 - fy) * u00 + fx * (1 - fy) * u10 + (1 - fx) * fy * u01 + fx * fy * u11;
}

double integrate_abs_pow(const Grid& grid, std::span<const double> values, double p) {
  const auto& w = grid.weights();
  double acc = 0.0;
  if (p == 1.0) {
    for (std::size_t n = 0; n < values.size(); ++n) acc += w[n] * std::abs(values[n]);
  } else {
    for (std::size_t n = 0; n < values.size(); ++n) acc += w[n] * std::pow(std::abs(values[n]), p);
  }
  return acc;
}

}  // namespace relaydiff
