#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relaydiff/loop.hpp"

namespace relaydiff {

/// Outcome of one numerical probe. Quantities keep insertion order for stable reports.
struct ProbeReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<std::string> notes;
  bool pass = true;
  // Integrability exponents carried as metadata.
  double p = 1.0;
  double q = 2.0;

  void measure(const std::string& key, double value) { measured.emplace_back(key, value); }
  double get(const std::string& key) const;
  /// Records the comparison and folds it into `pass`.
  bool require(const std::string& what, bool ok);
};

// ---------------------------------------------------------------------------
// Heat oracle: u_t = Lap u, Neumann, u0 = cos(pi x) [cos(pi y)] on the unit
// interval/square; exact solution exp(-d pi^2 t) u0.

/// Max nodal error at time T of the IMEX solver against the analytic decay.
double heat_error(int dim, std::size_t nodes, double dt, double T);

struct HeatOracleOptions {
  int dim = 1;
  std::size_t accuracy_nodes = 129;
  double accuracy_dt = 1e-4;
  double horizon = 0.1;
  double accuracy_tol = 1e-3;
  /// Spatial refinement at a time step small enough that spatial error dominates.
  std::vector<std::size_t> spatial_nodes{9, 17, 33};
  double spatial_dt = 1e-5;
  /// Temporal refinement at a fine grid.
  std::vector<double> temporal_dts{4e-3, 2e-3, 1e-3};
  std::size_t temporal_nodes = 257;
};

ProbeReport heat_oracle(const HeatOracleOptions& opts = {});

// ---------------------------------------------------------------------------
// Stability of the control-to-state map.

/// Random piecewise-linear control table inside M_S: |kappa_j| <= kappa_bound_j
/// and slopes <= derivative_bound_j.
TimeTable random_ms_control(const SimConfig& config, std::uint64_t seed, std::size_t knots = 9);

struct StabilityPair {
  double state_l1 = 0.0;    // ||u1 - u2||_{L1(Q_T)}
  double state_l2sq = 0.0;  // ||u1 - u2||^2_{L2(Q_T)}
  double source_l1 = 0.0;   // ||g(k1) - g(k2)||_{L1(Q_T)}
  double ratio = 0.0;
};

StabilityPair stability_pair(const SimConfig& config, const TimeTable& k1, const TimeTable& k2);

struct StabilityOptions {
  std::size_t pairs = 20;
  std::uint64_t seed = 42;
  /// Declared cap every ratio must respect (the empirical c5 bound).
  double ratio_cap = 1e300;
  /// Require (max - min) / min <= this, or nullopt to skip the constancy check.
  std::optional<double> constancy_tol;
};

ProbeReport stability_probe(const SimConfig& config, const StabilityOptions& opts);

// ---------------------------------------------------------------------------
// Interior Hoelder continuity in the anisotropic gauge max(dx_i^2, |dt/4|).

double parabolic_gauge(const Point& dx, int dim, double dt);

struct HolderFit {
  double alpha = 1.0;
  double c6 = 0.0;
  std::size_t pairs = 0;
};

struct HolderOptions {
  /// Fraction of each extent excluded near the boundary.
  double margin = 0.1;
  /// Fix alpha and fit only c6 (alpha is control-independent).
  std::optional<double> fixed_alpha;
  std::size_t max_offset_steps = 64;
};

/// Fits (alpha, c6) over interior point-time pairs of a snapshot sequence.
HolderFit holder_fit(const std::vector<Snapshot>& snapshots, const Grid& grid, double dt,
                     const HolderOptions& opts = {});

/// Requires snapshots at every step.
ProbeReport holder_probe(const Trajectory& trajectory, const Grid& grid, double dt,
                         const HolderOptions& opts = {});

/// c6 across `controls` random M_S controls with a common alpha; reports max/min spread.
ProbeReport holder_sweep(const SimConfig& config, std::size_t controls, std::uint64_t seed,
                         double spread_cap = 10.0, const HolderOptions& opts = {});

// ---------------------------------------------------------------------------
// Grid convergence.

struct ConvergenceOptions {
  std::size_t levels = 3;
  /// dt shrinks by this factor per level while h halves (4 keeps dt ~ h^2).
  double dt_factor = 4.0;
};

/// Successive-level differences of the final field and the kappa table, plus
/// the residual at every level.
ProbeReport convergence_study(const SimConfig& config, const ConvergenceOptions& opts = {});

}  // namespace relaydiff
