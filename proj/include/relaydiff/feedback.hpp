#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relaydiff {

/// Switching law applied to each sensor error.
struct RelaySpec {
  enum class Mode { strict, convexified, smoothed };
  Mode mode = Mode::convexified;
  double delta = 0.0;  // smoothed only

  static RelaySpec strict() { return {Mode::strict, 0.0}; }
  static RelaySpec convexified() { return {Mode::convexified, 0.0}; }
  static RelaySpec smoothed(double delta) { return {Mode::smoothed, delta}; }

  bool multivalued() const noexcept { return mode == Mode::convexified; }
  std::string name() const;
};

/// Closed interval [lo, hi]; the value of one admissible power set W_j.
struct AdmissibleInterval {
  double lo = 0.0;
  double hi = 0.0;

  static AdmissibleInterval point(double v) { return {v, v}; }

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  bool degenerate() const noexcept { return lo == hi; }
  double width() const noexcept { return hi - lo; }
  /// Distance from v to the interval (0 inside).
  double distance(double v) const noexcept {
    return v < lo ? lo - v : (v > hi ? v - hi : 0.0);
  }
  bool operator==(const AdmissibleInterval&) const = default;
};

AdmissibleInterval relay(const RelaySpec& spec, double r);

/// Piecewise-linear function of time given by breakpoints, held constant beyond its ends.
struct PiecewiseLinear {
  std::vector<double> times;
  std::vector<double> values;

  static PiecewiseLinear constant(double v) { return {{0.0}, {v}}; }
  double operator()(double t) const;
};

/// m x n time-dependent convex weights alpha_jk(t).
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, std::vector<PiecewiseLinear> entries);

  static WeightMatrix constant(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const PiecewiseLinear& entry(std::size_t j, std::size_t k) const { return entries_[j * cols_ + k]; }
  double operator()(std::size_t j, std::size_t k, double t) const { return entry(j, k)(t); }

  /// Union of the breakpoints of every entry in row j, sorted.
  std::vector<double> row_breakpoints(std::size_t j) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<PiecewiseLinear> entries_;
};

struct WeightViolation {
  std::size_t row;  // zero-based
  double time;
  double row_sum;
  double min_entry;
  std::string describe() const;
};

/// Nonnegativity and unit row sums (within 1e-12) at every breakpoint of every row.
std::optional<WeightViolation> weights_validate(const WeightMatrix& alpha);

/// W_j = sum_k alpha_jk(t) relay(err_k), evaluated as a Minkowski sum of scaled intervals.
std::vector<AdmissibleInterval> admissible_set(const RelaySpec& relays, const WeightMatrix& alpha,
                                               double t, std::span<const double> err);
void admissible_set_into(const RelaySpec& relays, const WeightMatrix& alpha, double t,
                         std::span<const double> err, std::span<AdmissibleInterval> out);

struct SelectionStrategy {
  enum class Kind { midpoint, prefer_zero, prefer_previous, extreme_lo, extreme_hi, hysteresis };
  Kind kind = Kind::midpoint;
  double band = 0.0;  // hysteresis only

  std::string name() const;
};

/// Deterministic single-valued selection from an admissible interval. The
/// result always lies in [set.lo, set.hi].
double select(const AdmissibleInterval& set, const SelectionStrategy& strategy,
              std::optional<double> previous);

}  // namespace relaydiff
