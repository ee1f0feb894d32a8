#include "relaydiff/loop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

Field InitialProfile::realize(const Grid& grid) const {
  switch (kind) {
    case Kind::constant: return Field(grid, value);
    case Kind::cosine:
      return make_field(grid, [&](const Point& x) {
        double c = std::cos(std::numbers::pi * x[0] / grid.extent(0));
        if (grid.dim() == 2) c *= std::cos(std::numbers::pi * x[1] / grid.extent(1));
        return value * c;
      });
    case Kind::table: return Field(grid, values);
  }
  return Field(grid);
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

std::size_t SimConfig::effective_stride() const {
  if (snapshot_stride > 0) return snapshot_stride;
  const std::size_t n = steps();
  return std::max<std::size_t>(1, (n + 62) / 63);
}

std::vector<double> SimConfig::law_bounds() const {
  // Convex weights over relays valued in [-1, 1] keep every W_j inside [-1, 1].
  return std::vector<double>(controller.size(), 1.0);
}

BoundsReport SimConfig::bounds() const { return a_priori_bounds(controller, law_bounds()); }

std::vector<std::string> SimConfig::validate() const {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) { out.push_back(s); };
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
  };

  if (!(horizon > 0.0) || !std::isfinite(horizon)) add("time horizon must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) add("time step must be positive and finite");
  if (horizon > 0.0 && dt > 0.0) {
    const double n = std::round(horizon / dt);
    if (n < 1.0 || std::abs(n * dt - horizon) > 1e-12 * std::max(1.0, horizon))
      add("time step " + fmt(dt) + " does not divide the horizon " + fmt(horizon));
  }
  if (!(state_cap > 0.0)) add("state cap must be positive");

  // Reaction: growth bound and explicit step-size restriction.
  const GrowthCert cert = growth_cert.value_or(reaction.default_cert());
  if (cert.c1 < 0.0 || cert.c2 < 0.0) add("growth constants c1, c2 must be nonnegative");
  if (reaction(0.0) != 0.0) add("reaction term must vanish at zero");
  try {
    if (auto bad = growth_check(reaction, cert, growth_range[0], growth_range[1], growth_samples))
      add("reaction " + reaction.name() + " violates the growth bound f(s)s <= " + fmt(cert.c1) + " + " +
          fmt(cert.c2) + " s^2 at s = " + fmt(*bad));
  } catch (const PreconditionError& e) {
    add(e.what());
  }
  if (dt > 0.0 && state_cap > 0.0) {
    const double lip = reaction.lipschitz_on(state_cap);
    if (dt * lip > 0.5)
      add("explicit reaction step too large: dt * Lip(f) = " + fmt(dt * lip) + " > 0.5 on |u| <= " +
          fmt(state_cap));
  }

  // Initial state: bounded, inside the declared cap.
  try {
    const Field u = u0.realize(grid);
    if (!u.all_finite())
      add("initial state has non-finite values; u0 must be bounded");
    else if (u.max_abs() > state_cap)
      add("initial state max |u0| = " + fmt(u.max_abs()) + " exceeds the state cap " + fmt(state_cap));
  } catch (const std::exception& e) {
    add(std::string("initial state: ") + e.what());
  }

  for (auto& s : bank.validate(grid)) add(s);
  for (auto& s : sensors.validate(grid)) add(s);
  for (auto& s : controller.validate()) add(s);

  const std::size_t m = bank.size();
  if (controller.size() != m)
    add("controller count " + std::to_string(controller.size()) + " does not match actuator count " +
        std::to_string(m));
  if (alpha.rows() != m)
    add("weight matrix has " + std::to_string(alpha.rows()) + " rows, expected one per actuator (" +
        std::to_string(m) + ")");
  if (alpha.cols() != sensors.size())
    add("weight matrix has " + std::to_string(alpha.cols()) + " columns, expected one per sensor (" +
        std::to_string(sensors.size()) + ")");
  if (auto bad = weights_validate(alpha)) add(bad->describe());

  if (relays.mode == RelaySpec::Mode::smoothed && !(relays.delta > 0.0))
    add("smoothed relay needs a positive width delta");
  if (strategy.kind == SelectionStrategy::Kind::hysteresis && !(strategy.band > 0.0))
    add("hysteresis selection needs a positive band");

  if (!(tol.picard_tol > 0.0)) add("picard tolerance must be positive");
  if (tol.picard_max_iter < 1) add("picard iteration cap must be at least 1");
  if (!(tol.picard_damping > 0.0 && tol.picard_damping <= 1.0)) add("picard damping must lie in (0, 1]");
  if (!(tol.linear_solver_tol > 0.0)) add("linear solver tolerance must be positive");
  if (!(q >= 1.0) || !(p == 0.0 || p >= 1.0)) add("integrability exponents need p, q >= 1");
  return out;
}

void SimConfig::require_valid() const {
  auto v = validate();
  if (!v.empty()) throw ConfigError(std::move(v));
}

namespace {

void check_state(std::span<const double> u, std::size_t step) {
  for (double x : u)
    if (!std::isfinite(x))
      throw NumericalError("state became non-finite at step " + std::to_string(step),
                           std::numeric_limits<double>::infinity());
}

double max_abs(std::span<const double> u) {
  double m = 0.0;
  for (double x : u) m = std::max(m, std::abs(x));
  return m;
}

// Sensor errors into the admissible intervals at time t, then the selection.
struct LawEvaluator {
  const SimConfig& config;
  std::vector<double> err;
  std::vector<AdmissibleInterval> sets;

  explicit LawEvaluator(const SimConfig& c) : config(c), err(c.sensors.size()), sets(c.alpha.rows()) {}

  void intervals(double t, std::span<const double> readings) {
    for (std::size_t k = 0; k < err.size(); ++k) err[k] = readings[k] - config.sensors.references[k];
    admissible_set_into(config.relays, config.alpha, t, err, sets);
  }
};

}  // namespace

OpenLoopResult solve_open_loop(const SimConfig& config, const TimeTable& kappa, std::size_t stride) {
  const std::size_t N = config.steps();
  if (kappa.steps != N + 1 || kappa.rows != config.bank.size())
    throw PreconditionError("control table does not match the configuration's time grid");
  ActuatorLayout layout(config.bank, config.grid);
  ImexStepper stepper(config.grid, config.dt, config.solver_options());

  OpenLoopResult out;
  out.readings = TimeTable(config.sensors.size(), N + 1);
  Field u = config.u0.realize(config.grid);
  Field next(config.grid), source(config.grid);
  std::vector<double> r(config.sensors.size()), k(kappa.rows);

  auto record = [&](std::size_t n) {
    read_into(config.sensors, u, r);
    out.readings.set_column(n, r);
    out.max_abs_u = std::max(out.max_abs_u, max_abs(u.values));
    if (stride > 0 && (n % stride == 0)) out.snapshots.push_back({n, config.time(n), u.values});
  };
  record(0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < k.size(); ++j) k[j] = kappa(j, n);
    layout.source_into(k, config.time(n), source.values);
    stepper.step(u.values, config.reaction, source.values, next.values);
    std::swap(u.values, next.values);
    check_state(u.values, n + 1);
    record(n + 1);
  }
  return out;
}

void select_along(const SimConfig& config, const TimeTable& readings, TimeTable& lo, TimeTable& hi,
                  TimeTable& v) {
  const std::size_t m = config.alpha.rows();
  const std::size_t steps = readings.steps;
  lo = TimeTable(m, steps);
  hi = TimeTable(m, steps);
  v = TimeTable(m, steps);
  LawEvaluator law(config);
  std::vector<double> r(readings.rows);
  for (std::size_t n = 0; n < steps; ++n) {
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = readings(k, n);
    law.intervals(config.time(n), r);
    for (std::size_t j = 0; j < m; ++j) {
      lo(j, n) = law.sets[j].lo;
      hi(j, n) = law.sets[j].hi;
      const std::optional<double> prev = n > 0 ? std::optional<double>(v(j, n - 1)) : std::nullopt;
      v(j, n) = select(law.sets[j], config.strategy, prev);
    }
  }
}

Trajectory simulate(const SimConfig& config) {
  config.require_valid();
  const std::size_t N = config.steps();
  const std::size_t m = config.bank.size();
  const std::size_t ns = config.sensors.size();
  const std::size_t stride = config.effective_stride();

  ActuatorLayout layout(config.bank, config.grid);
  ImexStepper stepper(config.grid, config.dt, config.solver_options());
  LawEvaluator law(config);

  Trajectory tr;
  tr.times.resize(N + 1);
  for (std::size_t n = 0; n <= N; ++n) tr.times[n] = config.time(n);
  tr.kappa = TimeTable(m, N + 1);
  tr.v = TimeTable(m, N + 1);
  tr.readings = TimeTable(ns, N + 1);
  tr.lo = TimeTable(m, N + 1);
  tr.hi = TimeTable(m, N + 1);
  tr.bounds = config.bounds();

  Field u = config.u0.realize(config.grid);
  Field next(config.grid), source(config.grid);
  std::vector<double> r(ns);
  std::vector<double> kappa = config.controller.initial;

  auto sense_and_select = [&](std::size_t n) {
    read_into(config.sensors, u, r);
    tr.readings.set_column(n, r);
    law.intervals(config.time(n), r);
    for (std::size_t j = 0; j < m; ++j) {
      tr.lo(j, n) = law.sets[j].lo;
      tr.hi(j, n) = law.sets[j].hi;
      const std::optional<double> prev = n > 0 ? std::optional<double>(tr.v(j, n - 1)) : std::nullopt;
      tr.v(j, n) = select(law.sets[j], config.strategy, prev);
    }
    tr.max_abs_u = std::max(tr.max_abs_u, max_abs(u.values));
    if (n % stride == 0) tr.snapshots.push_back({n, config.time(n), u.values});
  };

  tr.kappa.set_column(0, kappa);
  sense_and_select(0);
  for (std::size_t n = 0; n < N; ++n) {
    layout.source_into(kappa, config.time(n), source.values);
    stepper.step(u.values, config.reaction, source.values, next.values);
    std::swap(u.values, next.values);
    check_state(u.values, n + 1);
    sense_and_select(n + 1);
    for (std::size_t j = 0; j < m; ++j)
      kappa[j] = controller_step(kappa[j], tr.v(j, n + 1), config.dt, config.controller.beta[j]);
    tr.kappa.set_column(n + 1, kappa);
  }
  return tr;
}

std::size_t count_sign_changes(const TimeTable& table) {
  std::size_t count = 0;
  for (std::size_t j = 0; j < table.rows; ++j) {
    int last = 0;
    for (std::size_t n = 0; n < table.steps; ++n) {
      const double x = table(j, n);
      const int s = x > 0.0 ? 1 : (x < 0.0 ? -1 : 0);
      if (s != 0) {
        if (last != 0 && s != last) ++count;
        last = s;
      }
    }
  }
  return count;
}

PicardResult picard_solve(const SimConfig& config) {
  config.require_valid();
  const std::size_t N = config.steps();
  const std::size_t m = config.bank.size();
  const double theta = config.tol.picard_damping;

  // v = 0 trajectory: kappa_j(t) = a_j exp(-t / beta_j).
  TimeTable kappa(m, N + 1);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t n = 0; n <= N; ++n)
      kappa(j, n) = config.controller.initial[j] * std::exp(-config.time(n) / config.controller.beta[j]);

  PicardResult res;
  ResidualReport& rep = res.report;
  rep.multivalued_law = config.relays.mode != RelaySpec::Mode::smoothed;
  TimeTable lo, hi, v;
  for (std::size_t it = 0; it < config.tol.picard_max_iter; ++it) {
    const OpenLoopResult R = solve_open_loop(config, kappa, 0);
    select_along(config, R.readings, lo, hi, v);
    TimeTable next = controller_trajectory(config.controller, v, config.dt);
    if (theta != 1.0)
      for (std::size_t i = 0; i < next.data.size(); ++i)
        next.data[i] = (1.0 - theta) * kappa.data[i] + theta * next.data[i];
    const double d = TimeTable::sup_distance(next, kappa);
    if (!rep.residual_history.empty() && d > rep.residual_history.back()) ++rep.residual_increases;
    rep.residual_history.push_back(d);
    kappa = std::move(next);
    if (d <= config.tol.picard_tol) {
      rep.converged = true;
      break;
    }
  }
  rep.iterations = rep.residual_history.size();
  rep.final_residual = rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
  rep.selection_switches = count_sign_changes(v);

  // Sensor data and intervals consistent with the returned control table.
  Trajectory& tr = res.trajectory;
  OpenLoopResult last = solve_open_loop(config, kappa, config.effective_stride());
  TimeTable lo_f, hi_f, v_f;
  select_along(config, last.readings, lo_f, hi_f, v_f);
  tr.times.resize(N + 1);
  for (std::size_t n = 0; n <= N; ++n) tr.times[n] = config.time(n);
  tr.kappa = std::move(kappa);
  tr.v = std::move(v);
  tr.readings = std::move(last.readings);
  tr.lo = std::move(lo_f);
  tr.hi = std::move(hi_f);
  tr.snapshots = std::move(last.snapshots);
  tr.max_abs_u = last.max_abs_u;
  tr.bounds = config.bounds();
  return res;
}

ResidualBreakdown residual(const Trajectory& trajectory, const SimConfig& config) {
  const std::size_t N = config.steps();
  const std::size_t m = config.bank.size();
  if (trajectory.kappa.steps != N + 1 || trajectory.kappa.rows != m ||
      trajectory.readings.steps != N + 1 || trajectory.readings.rows != config.sensors.size())
    throw PreconditionError("trajectory was not produced on this configuration's grids");

  ResidualBreakdown out;
  const OpenLoopResult resolve = solve_open_loop(config, trajectory.kappa, 0);
  for (std::size_t i = 0; i < resolve.readings.data.size(); ++i)
    out.sensor_defect =
        std::max(out.sensor_defect, std::abs(resolve.readings.data[i] - trajectory.readings.data[i]));

  LawEvaluator law(config);
  std::vector<double> r(config.sensors.size());
  for (std::size_t n = 0; n < N; ++n) {
    // The value held over [t_n, t_{n+1}] was selected from W(t_{n+1}).
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = resolve.readings(k, n + 1);
    law.intervals(config.time(n + 1), r);
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = config.controller.beta[j];
      const double k0 = trajectory.kappa(j, n), k1 = trajectory.kappa(j, n + 1);
      const double lhs = beta * (k1 - k0) / config.dt + k0;
      const double d = law.sets[j].distance(lhs);
      if (d > out.inclusion_defect) {
        out.inclusion_defect = d;
        out.worst_step = n;
        out.worst_row = j;
      }
    }
  }
  out.total = out.inclusion_defect + out.sensor_defect;
  return out;
}

double affine_check(const SimConfig& config, const TimeTable& v1, const TimeTable& v2, double lambda) {
  if (v1.rows != v2.rows || v1.steps != v2.steps) throw PreconditionError("selection tables differ in shape");
  if (v1.steps != config.steps() + 1) throw PreconditionError("selection tables do not match the time grid");
  // Written as v2 + l (v1 - v2) so that v1 == v2 and the endpoints l in {0, 1} are exact.
  auto combine = [&](const TimeTable& a, const TimeTable& b) {
    if (lambda == 1.0) return a;
    if (lambda == 0.0) return b;
    TimeTable out(a.rows, a.steps);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = b.data[i] + lambda * (a.data[i] - b.data[i]);
    return out;
  };
  const TimeTable p1 = controller_trajectory(config.controller, v1, config.dt);
  const TimeTable p2 = controller_trajectory(config.controller, v2, config.dt);
  const TimeTable pm = controller_trajectory(config.controller, combine(v1, v2), config.dt);
  return TimeTable::sup_distance(pm, combine(p1, p2));
}

}  // namespace relaydiff
