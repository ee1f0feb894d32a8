#pragma once

#include <span>
#include <string>
#include <vector>

namespace relaydiff {

/// Drive dynamics beta_j kappa_j' + kappa_j = v_j with kappa_j(0) = a_j.
struct ControllerParams {
  std::vector<double> beta;
  std::vector<double> initial;

  std::size_t size() const noexcept { return beta.size(); }
  std::vector<std::string> validate() const;
};

/// Row-major table: value(j, n) for controller j at time index n.
struct TimeTable {
  std::size_t rows = 0;
  std::size_t steps = 0;  // number of time samples (N + 1)
  std::vector<double> data;

  TimeTable() = default;
  TimeTable(std::size_t r, std::size_t s, double fill = 0.0) : rows(r), steps(s), data(r * s, fill) {}

  double& operator()(std::size_t j, std::size_t n) { return data[j * steps + n]; }
  double operator()(std::size_t j, std::size_t n) const { return data[j * steps + n]; }
  std::span<const double> row(std::size_t j) const { return {data.data() + j * steps, steps}; }
  std::span<double> row(std::size_t j) { return {data.data() + j * steps, steps}; }
  std::vector<double> column(std::size_t n) const;
  void set_column(std::size_t n, std::span<const double> col);

  /// max_{j,n} |a - b|
  static double sup_distance(const TimeTable& a, const TimeTable& b);
};

/// Exact step of beta k' + k = v with v held constant over [t, t + dt].
double controller_step(double kappa, double v, double dt, double beta);

/**
 * Applies controller_step component-wise. Column n + 1 of `v` is the value
 * held over [t_n, t_{n+1}]; column 0 is ignored. Returns kappa with column 0
 * equal to the initial values.
 */
TimeTable controller_trajectory(const ControllerParams& params, const TimeTable& v, double dt);

struct BoundsReport {
  std::vector<double> kappa_bound;       // |a_j| + C_j
  std::vector<double> derivative_bound;  // (|a_j| + 2 C_j) / beta_j
  std::vector<double> law_bound;         // C_j
  double S = 0.0;
  /// S as printed with (|a_j| + 2) / beta_j; differs from S only when some C_j != 1.
  double S_printed = 0.0;
  bool printed_formula_differs = false;
};

BoundsReport a_priori_bounds(const ControllerParams& params, std::span<const double> C);

struct MembershipResult {
  bool pass = true;
  std::size_t row = 0;
  std::size_t step = 0;
  double value = 0.0;  // offending |kappa| or difference quotient
  std::string what;
};

/**
 * Checks max_t |kappa_j| <= S and every difference quotient
 * |kappa_j(t + dt) - kappa_j(t)| / dt <= S + 1e-9 + C_j dt / beta_j^2.
 */
MembershipResult in_M_S(const TimeTable& kappa, double S, double dt, const ControllerParams& params,
                        std::span<const double> C);

}  // namespace relaydiff
