#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relaydiff/actuation.hpp"
#include "relaydiff/controller.hpp"
#include "relaydiff/dynamics.hpp"
#include "relaydiff/feedback.hpp"
#include "relaydiff/grid.hpp"
#include "relaydiff/sensing.hpp"

namespace relaydiff {

/// Initial state u_0.
struct InitialProfile {
  enum class Kind { constant, cosine, table };
  Kind kind = Kind::constant;
  double value = 0.0;          // constant value, or cosine amplitude
  std::vector<double> values;  // table: one value per node

  /// cosine: value * cos(pi x / Lx) [* cos(pi y / Ly)]
  Field realize(const Grid& grid) const;
};

struct Tolerances {
  double picard_tol = 1e-6;
  std::size_t picard_max_iter = 50;
  /// Weight of the new iterate in a damped Picard update (1 = plain iteration).
  double picard_damping = 1.0;
  double linear_solver_tol = 1e-10;
  std::size_t linear_solver_max_iter = 20000;
};

struct SimConfig {
  Grid grid;
  double horizon = 1.0;
  double dt = 1e-3;
  ReactionTerm reaction = ReactionTerm::zero();
  std::optional<GrowthCert> growth_cert;  // defaults to the kind's certificate
  std::array<double, 2> growth_range{-10.0, 10.0};
  std::size_t growth_samples = 2001;
  /// Declared bound on max |u| used for the reaction step-size check.
  double state_cap = 10.0;
  InitialProfile u0;
  ActuatorBank bank;
  SensorArray sensors;
  RelaySpec relays;
  WeightMatrix alpha;
  SelectionStrategy strategy;
  ControllerParams controller;
  Tolerances tol;
  /// Snapshot stride in steps; 0 picks the smallest stride giving <= 64 snapshots.
  std::size_t snapshot_stride = 0;
  /// Integrability exponents for the L^q(0,T;L^p) bound; p = 0 means p = dim.
  double p = 0.0;
  double q = 2.0;

  std::size_t steps() const;
  std::size_t effective_stride() const;
  double lp_exponent() const { return p > 0.0 ? p : static_cast<double>(grid.dim()); }
  double time(std::size_t n) const { return dt * static_cast<double>(n); }
  /// Law bounds C_j (1 for every row of a relay law with convex weights).
  std::vector<double> law_bounds() const;
  BoundsReport bounds() const;
  LinearSolveOptions solver_options() const {
    return {tol.linear_solver_tol, tol.linear_solver_max_iter};
  }

  /// Every violated invariant, described; empty when valid.
  std::vector<std::string> validate() const;
  /// Throws ConfigError listing every violation.
  void require_valid() const;
};

struct Snapshot {
  std::size_t step;
  double time;
  std::vector<double> values;
};

struct Trajectory {
  std::vector<double> times;
  TimeTable kappa;     // m x (N + 1)
  TimeTable v;         // m x (N + 1); column n + 1 is held over [t_n, t_{n+1}]
  TimeTable readings;  // n x (N + 1)
  TimeTable lo, hi;    // admissible interval bounds, m x (N + 1)
  std::vector<Snapshot> snapshots;
  BoundsReport bounds;
  double max_abs_u = 0.0;
};

struct OpenLoopResult {
  TimeTable readings;
  std::vector<Snapshot> snapshots;
  double max_abs_u = 0.0;
};

/**
 * Solves the PDE over the horizon with the control table held fixed: the
 * source at step n uses kappa column n. Records readings at every step and
 * snapshots every `stride` steps (0 disables snapshots).
 */
OpenLoopResult solve_open_loop(const SimConfig& config, const TimeTable& kappa, std::size_t stride);

/// Admissible intervals and selections along a readings table.
void select_along(const SimConfig& config, const TimeTable& readings, TimeTable& lo, TimeTable& hi,
                  TimeTable& v);

/// Time-marched closed loop with sample-and-hold actuation.
Trajectory simulate(const SimConfig& config);

struct ResidualReport {
  std::size_t iterations = 0;
  std::vector<double> residual_history;
  double final_residual = 0.0;
  bool converged = false;
  /// The law is set-valued or discontinuous (strict/convexified relay).
  bool multivalued_law = false;
  /// Sign changes of the final selection table, summed over controllers.
  std::size_t selection_switches = 0;
  /// Iterations where the residual grew.
  std::size_t residual_increases = 0;
};

struct PicardResult {
  Trajectory trajectory;
  ResidualReport report;
};

/// Picard iteration on whole-horizon control tables, starting from the v = 0 trajectory.
PicardResult picard_solve(const SimConfig& config);

struct ResidualBreakdown {
  double inclusion_defect = 0.0;  // max dist(beta dk/dt + k, W)
  double sensor_defect = 0.0;     // max |readings - re-solved readings|
  double total = 0.0;
  std::size_t worst_step = 0;
  std::size_t worst_row = 0;
};

/// Discrete solution certificate: zero up to an O(dt) sample-and-hold allowance.
ResidualBreakdown residual(const Trajectory& trajectory, const SimConfig& config);

/// max |P(l v1 + (1 - l) v2) - l P(v1) - (1 - l) P(v2)|
double affine_check(const SimConfig& config, const TimeTable& v1, const TimeTable& v2, double lambda);

/// Number of sign changes along each row of a table, summed.
std::size_t count_sign_changes(const TimeTable& table);

}  // namespace relaydiff
