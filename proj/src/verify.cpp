#include "relaydiff/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "relaydiff/errors.hpp"

namespace relaydiff {

double ProbeReport::get(const std::string& key) const {
  for (const auto& [k, v] : measured)
    if (k == key) return v;
  throw std::out_of_range("probe " + name + " has no measurement '" + key + "'");
}

bool ProbeReport::require(const std::string& what, bool ok) {
  if (!ok) {
    pass = false;
    notes.push_back("FAILED: " + what);
  }
  return ok;
}

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double order(double coarse_err, double fine_err, double ratio = 2.0) {
  return std::log(coarse_err / fine_err) / std::log(ratio);
}

}  // namespace

double heat_error(int dim, std::size_t nodes, double dt, double T) {
  const Grid grid = dim == 1 ? Grid::line(1.0, nodes) : Grid::rectangle(1.0, 1.0, nodes, nodes);
  auto exact = [&](const Point& x, double t) {
    double c = std::cos(std::numbers::pi * x[0]);
    if (dim == 2) c *= std::cos(std::numbers::pi * x[1]);
    return std::exp(-dim * std::numbers::pi * std::numbers::pi * t) * c;
  };
  Field u = make_field(grid, [&](const Point& x) { return exact(x, 0.0); });
  Field next(grid), zero(grid);
  ImexStepper stepper(grid, dt, {1e-12, 100000});
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  const ReactionTerm f = ReactionTerm::zero();
  for (std::size_t n = 0; n < steps; ++n) {
    stepper.step(u.values, f, zero.values, next.values);
    std::swap(u.values, next.values);
  }
  const double t_end = dt * static_cast<double>(steps);
  double err = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) err = std::max(err, std::abs(u[k] - exact(grid.coords(k), t_end)));
  return err;
}

ProbeReport heat_oracle(const HeatOracleOptions& o) {
  ProbeReport rep;
  rep.name = "heat";
  rep.p = o.dim;
  rep.inputs = {{"dim", std::to_string(o.dim)},
                {"accuracy_nodes", std::to_string(o.accuracy_nodes)},
                {"accuracy_dt", num(o.accuracy_dt)},
                {"horizon", num(o.horizon)}};

  const double acc = heat_error(o.dim, o.accuracy_nodes, o.accuracy_dt, o.horizon);
  rep.measure("max_error", acc);
  rep.tolerances.emplace_back("max_error", o.accuracy_tol);
  rep.require("max error " + num(acc) + " <= " + num(o.accuracy_tol), acc <= o.accuracy_tol);

  std::vector<double> es;
  for (std::size_t n : o.spatial_nodes) {
    es.push_back(heat_error(o.dim, n, o.spatial_dt, o.horizon));
    rep.measure("spatial_error_N" + std::to_string(n), es.back());
  }
  double worst_space = 2.0;
  for (std::size_t i = 0; i + 1 < es.size(); ++i) {
    const double r = es[i] / es[i + 1];
    const double p = order(es[i], es[i + 1]);
    rep.measure("spatial_ratio_" + std::to_string(i), r);
    rep.measure("spatial_order_" + std::to_string(i), p);
    if (std::abs(p - 2.0) > std::abs(worst_space - 2.0)) worst_space = p;
  }
  rep.measure("spatial_order", worst_space);
  rep.tolerances.emplace_back("spatial_order_pm", 0.2);
  rep.require("spatial order " + num(worst_space) + " within 2.0 +- 0.2", std::abs(worst_space - 2.0) <= 0.2);

  std::vector<double> et;
  for (double dt : o.temporal_dts) {
    et.push_back(heat_error(o.dim, o.temporal_nodes, dt, o.horizon));
    rep.measure("temporal_error_dt" + num(dt), et.back());
  }
  double worst_time = 1.0;
  for (std::size_t i = 0; i + 1 < et.size(); ++i) {
    const double p = order(et[i], et[i + 1], o.temporal_dts[i] / o.temporal_dts[i + 1]);
    rep.measure("temporal_ratio_" + std::to_string(i), et[i] / et[i + 1]);
    rep.measure("temporal_order_" + std::to_string(i), p);
    if (std::abs(p - 1.0) > std::abs(worst_time - 1.0)) worst_time = p;
  }
  rep.measure("temporal_order", worst_time);
  rep.tolerances.emplace_back("temporal_order_pm", 0.2);
  rep.require("temporal order " + num(worst_time) + " within 1.0 +- 0.2", std::abs(worst_time - 1.0) <= 0.2);
  return rep;
}

TimeTable random_ms_control(const SimConfig& config, std::uint64_t seed, std::size_t knots) {
  knots = std::max<std::size_t>(knots, 2);
  const BoundsReport b = config.bounds();
  const std::size_t N = config.steps();
  const std::size_t m = config.controller.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double dk = config.horizon / static_cast<double>(knots - 1);

  TimeTable out(m, N + 1);
  std::vector<double> kv(knots);
  for (std::size_t j = 0; j < m; ++j) {
    const double B = b.kappa_bound[j];
    const double D = b.derivative_bound[j];
    kv[0] = B * unit(rng);
    for (std::size_t i = 1; i < knots; ++i) {
      const double step = std::clamp(B * unit(rng) - kv[i - 1], -D * dk, D * dk);
      kv[i] = std::clamp(kv[i - 1] + step, -B, B);
    }
    for (std::size_t n = 0; n <= N; ++n) {
      const double s = config.time(n) / dk;
      const std::size_t i = std::min(static_cast<std::size_t>(s), knots - 2);
      const double fr = s - static_cast<double>(i);
      out(j, n) = kv[i] + fr * (kv[i + 1] - kv[i]);
    }
  }
  return out;
}

StabilityPair stability_pair(const SimConfig& config, const TimeTable& k1, const TimeTable& k2) {
  const std::size_t N = config.steps();
  const Grid& grid = config.grid;
  ActuatorLayout layout(config.bank, grid);
  ImexStepper s1(grid, config.dt, config.solver_options());
  ImexStepper s2(grid, config.dt, config.solver_options());
  Field u1 = config.u0.realize(grid), u2 = u1, next(grid), g1(grid), g2(grid), diff(grid);
  std::vector<double> c1(k1.rows), c2(k2.rows);

  // Per-time spatial integrals, then trapezoid in time.
  std::vector<double> a_l1(N + 1), a_l2(N + 1), a_g(N + 1);
  auto sources = [&](std::size_t n) {
    for (std::size_t j = 0; j < c1.size(); ++j) {
      c1[j] = k1(j, n);
      c2[j] = k2(j, n);
    }
    layout.source_into(c1, config.time(n), g1.values);
    layout.source_into(c2, config.time(n), g2.values);
    for (std::size_t k = 0; k < grid.size(); ++k) diff[k] = g1[k] - g2[k];
    a_g[n] = integrate_abs_pow(grid, diff.values, 1.0);
  };
  auto states = [&](std::size_t n) {
    for (std::size_t k = 0; k < grid.size(); ++k) diff[k] = u1[k] - u2[k];
    a_l1[n] = integrate_abs_pow(grid, diff.values, 1.0);
    a_l2[n] = integrate_abs_pow(grid, diff.values, 2.0);
  };
  states(0);
  for (std::size_t n = 0; n < N; ++n) {
    sources(n);
    s1.step(u1.values, config.reaction, g1.values, next.values);
    std::swap(u1.values, next.values);
    s2.step(u2.values, config.reaction, g2.values, next.values);
    std::swap(u2.values, next.values);
    states(n + 1);
  }
  sources(N);
  auto trap = [&](const std::vector<double>& a) {
    double acc = 0.5 * (a.front() + a.back());
    for (std::size_t n = 1; n < N; ++n) acc += a[n];
    return acc * config.dt;
  };
  StabilityPair out;
  out.state_l1 = trap(a_l1);
  out.state_l2sq = trap(a_l2);
  out.source_l1 = trap(a_g);
  out.ratio = out.source_l1 > 0.0 ? (out.state_l1 + out.state_l2sq) / out.source_l1 : 0.0;
  return out;
}

ProbeReport stability_probe(const SimConfig& config, const StabilityOptions& opts) {
  if (opts.pairs < 1) throw PreconditionError("stability_probe needs at least one pair");
  ProbeReport rep;
  rep.name = "stability";
  rep.p = config.lp_exponent();
  rep.q = config.q;
  rep.inputs = {{"pairs", std::to_string(opts.pairs)},
                {"seed", std::to_string(opts.seed)},
                {"reaction", config.reaction.name()}};
  std::uint64_t stream = opts.seed;
  std::vector<double> ratios;
  std::size_t resampled = 0;
  while (ratios.size() < opts.pairs) {
    const TimeTable k1 = random_ms_control(config, stream++);
    const TimeTable k2 = random_ms_control(config, stream++);
    const StabilityPair pr = stability_pair(config, k1, k2);
    if (pr.source_l1 < 1e-12) {
      if (++resampled > 100 * opts.pairs) throw NumericalError("stability_probe: only degenerate pairs", 0.0);
      continue;
    }
    ratios.push_back(pr.ratio);
    rep.measure("ratio_" + std::to_string(ratios.size() - 1), pr.ratio);
  }
  const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
  rep.measure("min_ratio", *mn);
  rep.measure("max_ratio", *mx);
  rep.measure("relative_spread", (*mx - *mn) / *mn);
  rep.measure("resampled_pairs", static_cast<double>(resampled));
  rep.tolerances.emplace_back("ratio_cap", opts.ratio_cap);
  rep.require("every ratio finite", std::all_of(ratios.begin(), ratios.end(), [](double r) { return std::isfinite(r); }));
  rep.require("max ratio " + num(*mx) + " <= cap " + num(opts.ratio_cap), *mx <= opts.ratio_cap);
  if (opts.constancy_tol) {
    rep.tolerances.emplace_back("relative_spread", *opts.constancy_tol);
    rep.require("ratio spread " + num((*mx - *mn) / *mn) + " <= " + num(*opts.constancy_tol),
                (*mx - *mn) / *mn <= *opts.constancy_tol);
  }
  return rep;
}

double parabolic_gauge(const Point& dx, int dim, double dt) {
  double g = std::abs(dt / 4.0);
  for (int a = 0; a < dim; ++a) g = std::max(g, dx[a] * dx[a]);
  return g;
}

HolderFit holder_fit(const std::vector<Snapshot>& snaps, const Grid& grid, double dt, const HolderOptions& opts) {
  for (std::size_t i = 1; i < snaps.size(); ++i)
    if (snaps[i].step != snaps[i - 1].step + 1)
      throw PreconditionError("holder probe needs a snapshot at every step");
  if (snaps.size() < 4) throw PreconditionError("holder probe needs at least four snapshots");

  // Interior index window per axis, and interior time window (exclude t = 0, T).
  std::array<std::size_t, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < 2; ++a) {
    if (a >= grid.dim()) continue;
    const std::size_t n = grid.count(a);
    lo[a] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opts.margin * static_cast<double>(n - 1))));
    hi[a] = n - 1 - lo[a];
    if (hi[a] <= lo[a] + 1) throw PreconditionError("holder probe margin leaves no interior window");
  }
  const std::size_t t_lo = 1, t_hi = snaps.size() - 2;

  struct Sample {
    double gauge, jump;
  };
  std::vector<Sample> samples;
  auto value = [&](std::size_t s, std::size_t i, std::size_t j) { return snaps[s].values[grid.index(i, j)]; };

  const std::size_t bx = std::max<std::size_t>(1, (hi[0] - lo[0]) / 12);
  const std::size_t by = grid.dim() == 2 ? std::max<std::size_t>(1, (hi[1] - lo[1]) / 12) : 1;
  const std::size_t bt = std::max<std::size_t>(1, (t_hi - t_lo) / 24);
  std::vector<std::size_t> offs_space{0}, offs_time{0};
  for (std::size_t d = 1; d <= (hi[0] - lo[0]) / 2; d *= 2) offs_space.push_back(d);
  for (std::size_t d = 1; d <= std::min(opts.max_offset_steps, (t_hi - t_lo) / 2); d *= 2) offs_time.push_back(d);

  const std::size_t jmax = grid.dim() == 2 ? hi[1] : 0;
  const std::size_t jmin = grid.dim() == 2 ? lo[1] : 0;
  for (std::size_t s = t_lo; s <= t_hi; s += bt)
    for (std::size_t j = jmin; j <= jmax; j += by)
      for (std::size_t i = lo[0]; i <= hi[0]; i += bx)
        for (std::size_t dn : offs_time) {
          if (s + dn > t_hi) continue;
          for (std::size_t di : offs_space) {
            const std::size_t dj_max = grid.dim() == 2 ? 1 : 0;
            for (std::size_t diag = 0; diag <= dj_max; ++diag) {
              const std::size_t dj = diag ? di : 0;
              if (di == 0 && dn == 0) continue;
              if (i + di > hi[0] || (grid.dim() == 2 && j + dj > hi[1])) continue;
              const Point dx{static_cast<double>(di) * grid.spacing(0),
                             grid.dim() == 2 ? static_cast<double>(dj) * grid.spacing(1) : 0.0};
              const double g = parabolic_gauge(dx, grid.dim(), static_cast<double>(dn) * dt);
              samples.push_back({g, std::abs(value(s + dn, i + di, j + dj) - value(s, i, j))});
            }
          }
        }

  HolderFit fit;
  fit.pairs = samples.size();
  const bool flat = std::all_of(samples.begin(), samples.end(), [](const Sample& x) { return x.jump == 0.0; });
  if (flat) return {1.0, 0.0, samples.size()};  // any exponent fits a constant field

  if (opts.fixed_alpha) {
    fit.alpha = *opts.fixed_alpha;
  } else {
    // Upper envelope: the samples that set a new record of the modulus of
    // continuity as the gauge grows, thinned to the largest one per dyadic shell.
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
      return a.gauge < b.gauge || (a.gauge == b.gauge && a.jump > b.jump);
    });
    std::map<int, Sample> env;
    double record = 0.0;
    for (const auto& x : samples) {
      if (x.jump <= record) continue;
      record = x.jump;
      env[static_cast<int>(std::floor(std::log2(x.gauge)))] = x;
    }
    if (env.size() < 2) {
      fit.alpha = 1.0;
    } else {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(env.size());
      for (const auto& [shell, x] : env) {
        const double lx = std::log(x.gauge), ly = std::log(x.jump);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      fit.alpha = std::min(1.0, (n * sxy - sx * sy) / (n * sxx - sx * sx));
    }
  }
  for (const auto& x : samples) fit.c6 = std::max(fit.c6, x.jump / std::pow(x.gauge, fit.alpha));
  return fit;
}

ProbeReport holder_probe(const Trajectory& trajectory, const Grid& grid, double dt, const HolderOptions& opts) {
  if (trajectory.snapshots.empty()) throw PreconditionError("holder probe needs a trajectory with snapshots");
  ProbeReport rep;
  rep.name = "holder";
  rep.p = grid.dim();
  rep.inputs = {{"margin", num(opts.margin)}, {"snapshots", std::to_string(trajectory.snapshots.size())}};
  const HolderFit fit = holder_fit(trajectory.snapshots, grid, dt, opts);
  rep.measure("alpha", fit.alpha);
  rep.measure("c6", fit.c6);
  rep.measure("pairs", static_cast<double>(fit.pairs));
  rep.require("alpha " + num(fit.alpha) + " > 0", fit.alpha > 0.0);
  rep.require("c6 finite", std::isfinite(fit.c6));
  return rep;
}

ProbeReport holder_sweep(const SimConfig& config, std::size_t controls, std::uint64_t seed, double spread_cap,
                         const HolderOptions& opts) {
  ProbeReport rep;
  rep.name = "holder_sweep";
  rep.p = config.lp_exponent();
  rep.q = config.q;
  rep.inputs = {{"controls", std::to_string(controls)}, {"seed", std::to_string(seed)}};
  std::vector<std::vector<Snapshot>> runs;
  double alpha = 1.0;
  for (std::size_t i = 0; i < controls; ++i) {
    const TimeTable k = random_ms_control(config, seed + i);
    runs.push_back(solve_open_loop(config, k, 1).snapshots);
    const HolderFit free = holder_fit(runs.back(), config.grid, config.dt, opts);
    rep.measure("alpha_" + std::to_string(i), free.alpha);
    alpha = std::min(alpha, free.alpha);
  }
  // One exponent for every control; c6 is then compared across controls.
  HolderOptions fixed = opts;
  fixed.fixed_alpha = alpha;
  std::vector<double> c6;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    c6.push_back(holder_fit(runs[i], config.grid, config.dt, fixed).c6);
    rep.measure("c6_" + std::to_string(i), c6.back());
  }
  const auto [mn, mx] = std::minmax_element(c6.begin(), c6.end());
  rep.measure("common_alpha", alpha);
  rep.measure("c6_spread", *mx / *mn);
  rep.tolerances.emplace_back("c6_spread", spread_cap);
  rep.require("common alpha > 0", alpha > 0.0);
  rep.require("c6 spread " + num(*mx / *mn) + " <= " + num(spread_cap), *mn > 0.0 && *mx / *mn <= spread_cap);
  return rep;
}

ProbeReport convergence_study(const SimConfig& base, const ConvergenceOptions& opts) {
  if (opts.levels < 3) throw PreconditionError("convergence study needs at least 3 levels");
  const auto factor = static_cast<std::size_t>(std::llround(opts.dt_factor));
  if (factor < 1 || std::abs(opts.dt_factor - static_cast<double>(factor)) > 1e-12)
    throw PreconditionError("dt refinement factor must be a positive integer");
  ProbeReport rep;
  rep.name = "convergence";
  rep.p = base.lp_exponent();
  rep.q = base.q;
  rep.inputs = {{"levels", std::to_string(opts.levels)}, {"dt_factor", num(opts.dt_factor)}};

  std::vector<SimConfig> cfgs;
  std::vector<Trajectory> runs;
  for (std::size_t l = 0; l < opts.levels; ++l) {
    SimConfig c = base;
    const std::size_t mult = std::size_t{1} << l;
    std::array<std::size_t, 2> counts{(base.grid.count(0) - 1) * mult + 1, 1};
    if (base.grid.dim() == 2) counts[1] = (base.grid.count(1) - 1) * mult + 1;
    c.grid = Grid(base.grid.dim(), {base.grid.extent(0), base.grid.extent(1)}, counts);
    c.dt = base.dt / std::pow(opts.dt_factor, static_cast<double>(l));
    if (base.u0.kind == InitialProfile::Kind::table)
      throw PreconditionError("convergence study needs an analytic initial profile");
    c.snapshot_stride = c.steps();
    runs.push_back(simulate(c));
    cfgs.push_back(std::move(c));
  }

  // Successive differences on the coarse nodes / coarse times.
  std::vector<double> du, dk, res;
  for (std::size_t l = 0; l + 1 < opts.levels; ++l) {
    const Grid& gc = cfgs[l].grid;
    const Grid& gf = cfgs[l + 1].grid;
    const auto& uc = runs[l].snapshots.back().values;
    const auto& uf = runs[l + 1].snapshots.back().values;
    double d = 0.0;
    for (std::size_t j = 0; j < gc.count(1); ++j)
      for (std::size_t i = 0; i < gc.count(0); ++i)
        d = std::max(d, std::abs(uc[gc.index(i, j)] - uf[gf.index(2 * i, gc.dim() == 2 ? 2 * j : 0)]));
    du.push_back(d);
    double e = 0.0;
    for (std::size_t j = 0; j < runs[l].kappa.rows; ++j)
      for (std::size_t n = 0; n < runs[l].kappa.steps; ++n)
        e = std::max(e, std::abs(runs[l].kappa(j, n) - runs[l + 1].kappa(j, n * factor)));
    dk.push_back(e);
    rep.measure("field_diff_" + std::to_string(l), d);
    rep.measure("kappa_diff_" + std::to_string(l), e);
  }
  for (std::size_t l = 0; l < opts.levels; ++l) {
    res.push_back(residual(runs[l], cfgs[l]).total);
    rep.measure("residual_" + std::to_string(l), res.back());
    rep.measure("residual_over_dt_" + std::to_string(l), res.back() / cfgs[l].dt);
  }
  // Error of each level against the finest.
  for (std::size_t l = 0; l + 1 < opts.levels; ++l) {
    const Grid& gc = cfgs[l].grid;
    const Grid& gf = cfgs.back().grid;
    const std::size_t stride = std::size_t{1} << (opts.levels - 1 - l);
    const auto& uc = runs[l].snapshots.back().values;
    const auto& uf = runs.back().snapshots.back().values;
    double d = 0.0;
    for (std::size_t j = 0; j < gc.count(1); ++j)
      for (std::size_t i = 0; i < gc.count(0); ++i)
        d = std::max(d, std::abs(uc[gc.index(i, j)] - uf[gf.index(stride * i, gc.dim() == 2 ? stride * j : 0)]));
    rep.measure("field_error_vs_finest_" + std::to_string(l), d);
  }
  auto ratio = [](double a, double b) { return a == 0.0 ? (b == 0.0 ? 0.0 : INFINITY) : b / a; };
  double worst_order = 2.0, worst_kratio = 0.0, worst_rratio = 0.0;
  for (std::size_t l = 0; l + 1 < du.size(); ++l) {
    if (du[l] > 0.0 && du[l + 1] > 0.0) {
      const double p = order(du[l], du[l + 1]);
      rep.measure("field_order_" + std::to_string(l), p);
      if (std::abs(p - 2.0) > std::abs(worst_order - 2.0)) worst_order = p;
    }
    worst_kratio = std::max(worst_kratio, ratio(dk[l], dk[l + 1]));
  }
  for (std::size_t l = 0; l + 1 < res.size(); ++l) worst_rratio = std::max(worst_rratio, ratio(res[l], res[l + 1]));
  const bool all_zero = std::all_of(du.begin(), du.end(), [](double x) { return x == 0.0; });
  rep.measure("field_order", all_zero ? 0.0 : worst_order);
  rep.measure("kappa_ratio", worst_kratio);
  rep.measure("residual_ratio", worst_rratio);
  rep.measure("all_zero", all_zero ? 1.0 : 0.0);
  return rep;
}

}  // namespace relaydiff
