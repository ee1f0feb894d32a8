#include <doctest.h>

#include <cmath>
#include <random>

#include "relaydiff/controller.hpp"
#include "relaydiff/errors.hpp"

using namespace relaydiff;

namespace {

// Classical RK4 on beta k' + k = v with v frozen, substeps per held interval.
double rk4_hold(double k, double v, double dt, double beta, int substeps) {
  const double h = dt / substeps;
  auto f = [&](double x) { return (v - x) / beta; };
  for (int i = 0; i < substeps; ++i) {
    const double a = f(k), b = f(k + 0.5 * h * a), c = f(k + 0.5 * h * b), d = f(k + h * c);
    k += h / 6.0 * (a + 2 * b + 2 * c + d);
  }
  return k;
}

TimeTable random_selection(std::size_t rows, std::size_t steps, double C, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-C, C);
  std::bernoulli_distribution flip(0.05);
  TimeTable v(rows, steps);
  for (std::size_t j = 0; j < rows; ++j) {
    double cur = u(rng);
    for (std::size_t n = 1; n < steps; ++n) {
      if (flip(rng)) cur = u(rng);
      v(j, n) = (n % 7 == 0) ? (cur > 0 ? C : -C) : cur;
    }
  }
  return v;
}

}  // namespace

TEST_CASE("homogeneous decay") {
  double k = 1.0;
  for (int n = 0; n < 1000; ++n) k = controller_step(k, 0.0, 1e-3, 1.0);
  CHECK(std::abs(k - std::exp(-1.0)) <= 1e-7);
}

TEST_CASE("constant input matches the closed form") {
  for (double beta : {0.01, 0.3, 5.0}) {
    for (double dt : {1e-4, 1e-2, 0.5}) {
      const double a = -0.7, C = 0.9;
      double k = a;
      for (int n = 1; n <= 400; ++n) {
        k = controller_step(k, C, dt, beta);
        const double t = n * dt;
        const double exact = std::exp(-t / beta) * a + C * (-std::expm1(-t / beta));
        CHECK(std::abs(k - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("tracking input is a fixed point") {
  for (double k : {-3.0, 0.0, 0.123456789, 7.5})
    for (double dt : {1e-6, 0.1, 10.0}) CHECK(controller_step(k, k, dt, 0.2) == doctest::Approx(k).epsilon(1e-15));
}

TEST_CASE("decoupled decay of two controllers") {
  const ControllerParams p{{1.0, 2.0}, {1.0, -2.0}};
  const double dt = 0.01;
  const TimeTable k = controller_trajectory(p, TimeTable(2, 301), dt);
  for (std::size_t n = 0; n < 301; ++n) {
    const double t = dt * n;
    CHECK(k(0, n) == doctest::Approx(std::exp(-t)).epsilon(1e-12));
    CHECK(k(1, n) == doctest::Approx(-2.0 * std::exp(-t / 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("bounded input from rest stays below 1 - exp(-t/beta)") {
  std::mt19937_64 rng(3);
  const ControllerParams p{{0.05, 0.4}, {0.0, 0.0}};
  const double dt = 0.002;
  const TimeTable v = random_selection(2, 1001, 1.0, rng);
  const TimeTable k = controller_trajectory(p, v, dt);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t n = 0; n < k.steps; ++n)
      CHECK(std::abs(k(j, n)) <= -std::expm1(-dt * n / p.beta[j]) + 1e-15);
}

TEST_CASE("square wave agrees with a fine RK4 reference") {
  const double beta = 0.05, dt = 0.01, period = 1.0;
  const ControllerParams p{{beta}, {0.3}};
  const std::size_t steps = 401;
  TimeTable v(1, steps);
  for (std::size_t n = 1; n < steps; ++n) v(0, n) = std::fmod(dt * (n - 1), period) < 0.5 * period ? 1.0 : -1.0;
  const TimeTable k = controller_trajectory(p, v, dt);
  double ref = 0.3, worst = 0.0;
  for (std::size_t n = 1; n < steps; ++n) {
    ref = rk4_hold(ref, v(0, n), dt, beta, 200);
    worst = std::max(worst, std::abs(k(0, n) - ref));
  }
  CHECK(worst <= 1e-8);
  // End of each half period: the gap left from the previous level, 2 exp(-half / beta), bounds the distance.
  for (std::size_t n = 50; n < steps; n += 50) CHECK(std::abs(std::abs(k(0, n)) - 1.0) <= 2.0 * std::exp(-0.5 / beta) + 1e-12);
}

TEST_CASE("a-priori bounds") {
  const std::vector<double> one{1.0};
  auto b = a_priori_bounds({{1.0}, {0.0}}, one);
  CHECK(b.kappa_bound[0] == 1.0);
  CHECK(b.derivative_bound[0] == 2.0);
  CHECK(b.S == 3.0);
  CHECK_FALSE(b.printed_formula_differs);

  b = a_priori_bounds({{0.5}, {1.0}}, one);
  CHECK(b.kappa_bound[0] == 2.0);
  CHECK(b.derivative_bound[0] == 6.0);
  CHECK(b.S == 8.0);
  CHECK(b.S_printed == b.S);

  const std::vector<double> tiny{1e-12};
  CHECK(a_priori_bounds({{1.0}, {0.0}}, tiny).S <= 1e-11);

  // With C != 1 the printed formula (|a| + 2) / beta disagrees and is flagged.
  const std::vector<double> half{0.5};
  b = a_priori_bounds({{0.5}, {1.0}}, half);
  CHECK(b.S == doctest::Approx(1.5 + 4.0));
  CHECK(b.S_printed == doctest::Approx(1.5 + 6.0));
  CHECK(b.printed_formula_differs);

  CHECK_THROWS_AS(a_priori_bounds({{1.0}, {0.0}}, std::vector<double>{0.0}), PreconditionError);
}

TEST_CASE("membership in M_S") {
  const ControllerParams p{{0.1}, {0.5}};
  const std::vector<double> C{1.0};
  const double S = a_priori_bounds(p, C).S, dt = 1e-3;

  TimeTable flat(1, 50, 0.5);
  CHECK(in_M_S(flat, S, dt, p, C).pass);

  TimeTable jump(1, 50, 0.0);
  for (std::size_t n = 25; n < 50; ++n) jump(0, n) = 2.0 * S * dt;
  const auto r = in_M_S(jump, S, dt, p, C);
  CHECK_FALSE(r.pass);
  CHECK(r.step == 24);
  CHECK(r.value == doctest::Approx(2.0 * S));

  TimeTable big(1, 5, S * 1.01);
  CHECK_FALSE(in_M_S(big, S, dt, p, C).pass);
}

TEST_CASE("random valid selections respect the a-priori bounds") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(-2.0, 2.0), ub(0.02, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ControllerParams p{{ub(rng), ub(rng)}, {ua(rng), ua(rng)}};
    const std::vector<double> C{1.0, 1.0};
    const double dt = trial % 2 ? 1e-3 : 1e-2;
    const auto b = a_priori_bounds(p, C);
    const TimeTable k = controller_trajectory(p, random_selection(2, 501, 1.0, rng), dt);
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t n = 0; n < k.steps; ++n) CHECK(std::abs(k(j, n)) <= b.kappa_bound[j]);
    CHECK(in_M_S(k, b.S, dt, p, C).pass);
  }
}

TEST_CASE("controller map is affine and contractive") {
  std::mt19937_64 rng(17);
  const ControllerParams p{{0.07}, {0.4}};
  const double dt = 0.005;
  const TimeTable v1 = random_selection(1, 400, 1.0, rng), v2 = random_selection(1, 400, 1.0, rng);
  const TimeTable k1 = controller_trajectory(p, v1, dt), k2 = controller_trajectory(p, v2, dt);
  for (double lam : {0.25, 0.5, 0.75}) {
    TimeTable vm(1, 400);
    for (std::size_t n = 0; n < 400; ++n) vm(0, n) = lam * v1(0, n) + (1 - lam) * v2(0, n);
    const TimeTable km = controller_trajectory(p, vm, dt);
    for (std::size_t n = 0; n < 400; ++n) CHECK(std::abs(km(0, n) - (lam * k1(0, n) + (1 - lam) * k2(0, n))) <= 1e-12);
  }
  CHECK(TimeTable::sup_distance(k1, k2) <= TimeTable::sup_distance(v1, v2));
}

TEST_CASE("the kappa bound is approached but not exceeded") {
  const ControllerParams p{{0.1}, {0.0}};
  TimeTable v(1, 2001, 1.0);
  const TimeTable k = controller_trajectory(p, v, 0.01);
  double sup = 0.0;
  for (std::size_t n = 0; n < k.steps; ++n) sup = std::max(sup, k(0, n));
  CHECK(sup <= 1.0 + 1e-15);
  CHECK(sup >= 1.0 - 1e-12);
}

TEST_CASE("controller parameter validation") {
  CHECK(ControllerParams{{0.1}, {0.0}}.validate().empty());
  CHECK(ControllerParams{{0.0}, {0.0}}.validate().size() == 1);
  CHECK(ControllerParams{{0.1, 0.2}, {0.0}}.validate().size() == 1);
  CHECK(ControllerParams{{}, {}}.validate().size() == 1);
}
