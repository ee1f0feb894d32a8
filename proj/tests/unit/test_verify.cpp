#include <doctest.h>

#include <cmath>
#include <numbers>

#include "relaydiff/errors.hpp"
#include "relaydiff/verify.hpp"
#include "scenarios.hpp"

using namespace relaydiff;

namespace {

std::vector<Snapshot> tabulate(const Grid& g, double dt, std::size_t steps, double (*u)(const Point&, double)) {
  std::vector<Snapshot> out;
  for (std::size_t n = 0; n < steps; ++n) {
    Snapshot s{n, dt * n, std::vector<double>(g.size())};
    for (std::size_t k = 0; k < g.size(); ++k) s.values[k] = u(g.coords(k), s.time);
    out.push_back(std::move(s));
  }
  return out;
}

SimConfig linear_stability_config() {
  SimConfig c = scenarios::single_loop(65, 1.0, 0.002);
  c.reaction = ReactionTerm::zero();
  c.bank = ActuatorBank({ActuatorProfile::gaussian({0.5, 0.0}, 0.1, 1.0)});
  c.sensors.references = {0.0};
  c.relays = RelaySpec::convexified();
  c.strategy = {SelectionStrategy::Kind::prefer_zero, 0.0};
  c.controller = {{0.2}, {0.0}};
  return c;
}

}  // namespace

TEST_CASE("heat oracle accuracy and orders") {
  const ProbeReport r = heat_oracle();
  CHECK(r.pass);
  CHECK(r.get("max_error") <= 1e-3);
  CHECK(r.get("spatial_order") == doctest::Approx(2.0).epsilon(0.1));
  CHECK(r.get("temporal_order") == doctest::Approx(1.0).epsilon(0.2));
  // Richardson ratios for the halvings in their expected ranges.
  CHECK(heat_error(1, 17, 1e-5, 0.1) / heat_error(1, 33, 1e-5, 0.1) >= 3.2);
  CHECK(heat_error(1, 17, 1e-5, 0.1) / heat_error(1, 33, 1e-5, 0.1) <= 4.8);
  const double t_ratio = heat_error(1, 257, 2e-3, 0.1) / heat_error(1, 257, 1e-3, 0.1);
  CHECK(t_ratio >= 1.7);
  CHECK(t_ratio <= 2.3);
}

TEST_CASE("2D heat error") {
  const double e1 = heat_error(2, 17, 1e-4, 0.05), e2 = heat_error(2, 33, 1e-4 / 4, 0.05);
  CHECK(e2 <= 1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("parabolic gauge") {
  CHECK(parabolic_gauge({0.1, 0.0}, 1, 0.0) == doctest::Approx(0.01));
  CHECK(parabolic_gauge({0.1, 0.3}, 2, 0.0) == doctest::Approx(0.09));
  CHECK(parabolic_gauge({0.0, 0.0}, 2, -0.2) == doctest::Approx(0.05));
  // Second coordinate is ignored in 1D.
  CHECK(parabolic_gauge({0.1, 5.0}, 1, 0.0) == doctest::Approx(0.01));
}

TEST_CASE("holder fit on fields with known exponents") {
  const Grid g = Grid::line(1.0, 65);
  const double dt = 1e-3;

  const auto flat = tabulate(g, dt, 40, [](const Point&, double) { return 0.7; });
  const HolderFit f0 = holder_fit(flat, g, dt);
  CHECK(f0.alpha == 1.0);
  CHECK(f0.c6 == 0.0);

  // u = x: jumps equal |dx| = gauge^(1/2) whenever space dominates the gauge.
  const auto lin = tabulate(g, dt, 40, [](const Point& p, double) { return p[0]; });
  const HolderFit f1 = holder_fit(lin, g, dt);
  CHECK(f1.alpha == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f1.c6 == doctest::Approx(1.0).epsilon(1e-9));

  // u = t: jumps equal |dt| = 4 gauge; the exponent is clamped at 1.
  const auto ramp = tabulate(g, dt, 40, [](const Point&, double t) { return t; });
  const HolderFit f2 = holder_fit(ramp, g, dt);
  CHECK(f2.alpha == doctest::Approx(1.0));
  CHECK(f2.c6 == doctest::Approx(4.0).epsilon(1e-9));

  HolderOptions fixed;
  fixed.fixed_alpha = 0.25;
  CHECK(holder_fit(lin, g, dt, fixed).alpha == 0.25);
}

TEST_CASE("holder probe preconditions") {
  const Grid g = Grid::line(1.0, 33);
  Trajectory empty;
  CHECK_THROWS_AS(holder_probe(empty, g, 1e-3), PreconditionError);
  auto snaps = tabulate(g, 1e-3, 10, [](const Point& p, double) { return p[0]; });
  snaps.erase(snaps.begin() + 4);
  CHECK_THROWS_AS(holder_fit(snaps, g, 1e-3), PreconditionError);
}

TEST_CASE("holder probe on the heat flow and a relay loop") {
  SimConfig heat = scenarios::single_loop(129, 0.1, 1e-4);
  heat.reaction = ReactionTerm::zero();
  heat.bank = ActuatorBank({ActuatorProfile::gaussian({0.5, 0.0}, 0.1, 0.0)});
  heat.u0 = {InitialProfile::Kind::cosine, 1.0, {}};
  heat.sensors = {{{0.25, 0.0}}, {0.0}};
  heat.snapshot_stride = 1;
  const ProbeReport h = holder_probe(simulate(heat), heat.grid, heat.dt);
  CHECK(h.pass);
  // A smooth field is Lipschitz in x, i.e. exponent 1/2 in the squared gauge; 1/2 is the floor.
  CHECK(h.get("alpha") >= 0.5);

  SimConfig relay = scenarios::single_loop(101, 1.0, 1e-3);
  relay.snapshot_stride = 1;
  const ProbeReport r = holder_probe(simulate(relay), relay.grid, relay.dt);
  CHECK(r.pass);
  CHECK(r.get("alpha") > 0.0);
  CHECK(std::isfinite(r.get("c6")));
}

TEST_CASE("holder constant is stable across controls") {
  const SimConfig c = scenarios::single_loop(65, 0.5, 1e-3);
  const ProbeReport r = holder_sweep(c, 5, 42, 10.0);
  CHECK(r.pass);
  CHECK(r.get("c6_spread") <= 10.0);
  CHECK(r.get("common_alpha") > 0.0);
}

TEST_CASE("random controls lie in M_S") {
  const SimConfig c = scenarios::plate_scenario();
  const auto b = c.bounds();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TimeTable k = random_ms_control(c, seed);
    CHECK(k.steps == c.steps() + 1);
    for (std::size_t j = 0; j < k.rows; ++j)
      for (std::size_t n = 0; n < k.steps; ++n) CHECK(std::abs(k(j, n)) <= b.kappa_bound[j]);
    CHECK(in_M_S(k, b.S, c.dt, c.controller, c.law_bounds()).pass);
  }
  CHECK(random_ms_control(c, 3).data == random_ms_control(c, 3).data);
  CHECK(random_ms_control(c, 3).data != random_ms_control(c, 4).data);
}

TEST_CASE("stability pairs") {
  const SimConfig c = linear_stability_config();
  const TimeTable k1 = random_ms_control(c, 1), k2 = random_ms_control(c, 2);

  const StabilityPair same = stability_pair(c, k1, k1);
  CHECK(same.source_l1 == 0.0);
  CHECK(same.state_l1 == 0.0);

  // With f = 0 the state difference depends only on the control difference.
  TimeTable s1 = k1, s2 = k2;
  for (std::size_t n = 0; n < s1.steps; ++n) {
    s1(0, n) += 0.3;
    s2(0, n) += 0.3;
  }
  const StabilityPair a = stability_pair(c, k1, k2), b = stability_pair(c, s1, s2);
  CHECK(a.ratio > 0.0);
  CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(1e-9));

  // Quadrature is resolution-robust: doubling the spatial resolution moves the norms by under 1%.
  SimConfig fine = c;
  fine.grid = Grid::line(1.0, 129);
  const StabilityPair f = stability_pair(fine, k1, k2);
  CHECK(f.source_l1 == doctest::Approx(a.source_l1).epsilon(0.01));
  CHECK(f.state_l1 == doctest::Approx(a.state_l1).epsilon(0.01));
  CHECK(f.state_l2sq == doctest::Approx(a.state_l2sq).epsilon(0.01));
}

TEST_CASE("stability probe on linear and Allen-Cahn dynamics") {
  const SimConfig lin = linear_stability_config();
  SimConfig ac = lin;
  ac.reaction = ReactionTerm::allen_cahn();
  StabilityOptions o;
  const ProbeReport rl = stability_probe(lin, o), ra = stability_probe(ac, o);
  CHECK(rl.pass);
  CHECK(ra.pass);
  CHECK(std::isfinite(ra.get("max_ratio")));
  CHECK(ra.get("max_ratio") <= 2.0 * rl.get("max_ratio"));

  o.ratio_cap = 0.5 * ra.get("max_ratio");
  CHECK_FALSE(stability_probe(ac, o).pass);
  o.pairs = 0;
  CHECK_THROWS_AS(stability_probe(ac, o), PreconditionError);
}

TEST_CASE("convergence studies") {
  const ProbeReport z = convergence_study(scenarios::zero_scenario());
  CHECK(z.get("all_zero") == 1.0);
  CHECK(z.get("kappa_diff_0") == 0.0);
  CHECK(z.get("kappa_diff_1") == 0.0);
  CHECK(z.get("residual_0") == 0.0);

  const ProbeReport s = convergence_study(scenarios::smoothed_scenario());
  CHECK(s.get("kappa_ratio") <= 0.75);
  CHECK(s.get("residual_ratio") <= 0.75);

  SimConfig heat = scenarios::single_loop(33, 0.1, 4e-4);
  heat.reaction = ReactionTerm::zero();
  heat.bank = ActuatorBank({ActuatorProfile::gaussian({0.5, 0.0}, 0.1, 0.0)});
  heat.u0 = {InitialProfile::Kind::cosine, 1.0, {}};
  heat.sensors = {{{0.25, 0.0}}, {0.0}};
  const ProbeReport h = convergence_study(heat);
  CHECK(h.get("field_order") == doctest::Approx(2.0).epsilon(0.1));

  ConvergenceOptions two;
  two.levels = 2;
  CHECK_THROWS_AS(convergence_study(heat, two), PreconditionError);
}
