// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "relaydiff/config.hpp"
#include "relaydiff/verify.hpp"

namespace fs = std::filesystem;
using namespace relaydiff;

namespace {

const fs::path kConfigs = RELAYDIFF_CONFIG_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::vector<fs::path> shipped_configs() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kConfigs))
    if (e.path().extension() == ".json" && e.path().stem() != "broken_weights") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + RELAYDIFF_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fine fourth-order reference for beta k' + k = v with v frozen over each step.
double rk4_hold(double k, double v, double dt, double beta, int substeps) {
  const double h = dt / substeps;
  auto f = [&](double x) { return (v - x) / beta; };
  for (int i = 0; i < substeps; ++i) {
    const double a = f(k), b = f(k + 0.5 * h * a), c = f(k + 0.5 * h * b), d = f(k + h * c);
    k += h / 6.0 * (a + 2 * b + 2 * c + d);
  }
  return k;
}

TimeTable random_selections(std::size_t rows, std::size_t steps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution hold(0.9);
  TimeTable v(rows, steps);
  for (std::size_t j = 0; j < rows; ++j) {
    double cur = u(rng);
    for (std::size_t n = 1; n < steps; ++n) {
      if (!hold(rng)) cur = u(rng) > 0 ? 1.0 : u(rng);
      v(j, n) = cur;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

Outcome heat() {
  const ProbeReport r = heat_oracle();
  const double e = r.get("max_error"), ps = r.get("spatial_order"), pt = r.get("temporal_order");
  const bool ok = e <= 1e-3 && std::abs(ps - 2.0) <= 0.2 && std::abs(pt - 1.0) <= 0.2;
  return {ok, "max error " + fmt(e) + " (<= 1e-3), spatial order " + fmt(ps) + " (2 +- 0.2), temporal order " +
                  fmt(pt) + " (1 +- 0.2)"};
}

Outcome controller_exactness() {
  // Relative to the trajectory scale max(|k0|, |v|): the closed form crosses zero at t = beta ln(7/3),
  // where a pointwise relative error measures cancellation rather than the step.
  double worst_closed = 0.0, worst_pointwise = 0.0;
  for (double beta : {0.01, 0.2, 3.0})
    for (double dt : {1e-4, 1e-2, 0.3}) {
      const double a = 0.8, v = -0.6;
      double k = a;
      for (int n = 1; n <= 1000; ++n) {
        k = controller_step(k, v, dt, beta);
        const double t = n * dt;
        const double exact = std::exp(-t / beta) * a - v * std::expm1(-t / beta);
        worst_closed = std::max(worst_closed, std::abs(k - exact) / std::max(std::abs(a), std::abs(v)));
        worst_pointwise = std::max(worst_pointwise, std::abs(k - exact) / std::max(std::abs(exact), 1e-300));
      }
    }
  const ControllerParams p{{0.05}, {0.3}};
  const double dt = 0.01;
  std::mt19937_64 rng(1);
  const TimeTable v = random_selections(1, 501, rng);
  const TimeTable k = controller_trajectory(p, v, dt);
  double ref = 0.3, worst_rk = 0.0;
  for (std::size_t n = 1; n < v.steps; ++n) {
    ref = rk4_hold(ref, v(0, n), dt, p.beta[0], 200);
    worst_rk = std::max(worst_rk, std::abs(k(0, n) - ref));
  }
  return {worst_closed <= 1e-12 && worst_rk <= 1e-8,
          "closed form rel. error " + fmt(worst_closed) + " (<= 1e-12; pointwise " + fmt(worst_pointwise) +
              "), vs RK4 " + fmt(worst_rk) + " (<= 1e-8)"};
}

Outcome a_priori() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ua(-2.0, 2.0), ub(0.02, 1.0);
  std::size_t violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ControllerParams p{{ub(rng), ub(rng)}, {ua(rng), ua(rng)}};
    const std::vector<double> C{1.0, 1.0};
    const auto b = a_priori_bounds(p, C);
    const double dt = trial % 2 ? 1e-3 : 1e-2;
    const TimeTable k = controller_trajectory(p, random_selections(2, 1001, rng), dt);
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t n = 0; n < k.steps; ++n)
        if (std::abs(k(j, n)) > b.kappa_bound[j]) ++violations;
    if (!in_M_S(k, b.S, dt, p, C).pass) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " violations over 100 random selection sequences (0)"};
}

Outcome selection_validity() {
  std::size_t bad = 0, steps = 0;
  double worst_ratio = 0.0;
  std::string worst_name;
  for (const auto& path : shipped_configs()) {
    SimConfig c = load_scenario(path).config;
    const Trajectory tr = simulate(c);
    for (std::size_t j = 0; j < tr.v.rows; ++j)
      for (std::size_t n = 0; n < tr.v.steps; ++n, ++steps)
        if (!(tr.lo(j, n) <= tr.v(j, n) && tr.v(j, n) <= tr.hi(j, n))) ++bad;
    const double r1 = residual(tr, c).total;
    if (r1 == 0.0) continue;
    c.dt *= 0.5;
    const double ratio = residual(simulate(c), c).total / r1;
    if (ratio > worst_ratio) worst_ratio = ratio, worst_name = path.stem().string();
  }
  return {bad == 0 && worst_ratio <= 0.75,
          std::to_string(bad) + " of " + std::to_string(steps) + " selections outside [lo, hi]; worst residual ratio on dt/2 " +
              fmt(worst_ratio) + " (" + worst_name + ", <= 0.75)"};
}

Outcome affinity() {
  const SimConfig c = load_scenario(kConfigs / "plate_2d.json").config;
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int pair = 0; pair < 20; ++pair) {
    const TimeTable v1 = random_selections(2, c.steps() + 1, rng), v2 = random_selections(2, c.steps() + 1, rng);
    for (double lam : {0.25, 0.5, 0.75}) worst = std::max(worst, affine_check(c, v1, v2, lam));
  }
  return {worst <= 1e-12, "max deviation " + fmt(worst) + " over 20 pairs x 3 weights (<= 1e-12)"};
}

Outcome weight_law() {
  std::size_t failing = 0, n = 0;
  for (const auto& path : shipped_configs()) {
    ++n;
    if (weights_validate(load_scenario(path).config.alpha)) ++failing;
  }
  const fs::path out = fs::temp_directory_path() / ("relaydiff_acc_broken_" + std::to_string(::getpid()));
  const int code = run_cli("validate --config " + (kConfigs / "broken_weights.json").string() + " --out " + out.string());
  fs::remove_all(out);
  return {failing == 0 && code == 2, std::to_string(n - failing) + "/" + std::to_string(n) +
                                         " shipped weight matrices valid; broken config exit code " +
                                         std::to_string(code) + " (2)"};
}

Outcome picard() {
  const auto t0 = std::chrono::steady_clock::now();
  const PicardResult s = picard_solve(load_scenario(kConfigs / "picard_smoothed.json").config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const PicardResult x = picard_solve(load_scenario(kConfigs / "picard_strict.json").config);
  const bool ok = s.report.converged && s.report.final_residual <= 1e-6 && s.report.iterations <= 50 && secs <= 120.0 &&
                  !x.report.converged;
  return {ok, "smoothed: residual " + fmt(s.report.final_residual) + " after " + std::to_string(s.report.iterations) +
                  " iterations in " + fmt(secs) + " s (<= 1e-6, <= 50, <= 120 s); strict: converged=" +
                  (x.report.converged ? "true" : "false") + " (false)"};
}

Outcome stability() {
  const Scenario lin = load_scenario(kConfigs / "stability_zero.json");
  const Scenario ac = load_scenario(kConfigs / "stability_allen_cahn.json");
  StabilityOptions o;
  o.pairs = 20;
  o.seed = 42;
  const ProbeReport rl = stability_probe(lin.config, o);
  o.ratio_cap = ac.probes.stability_ratio_cap;
  const ProbeReport ra = stability_probe(ac.config, o);
  const double spread = rl.get("relative_spread"), mx = ra.get("max_ratio");
  return {spread <= 0.05 && mx <= ac.probes.stability_ratio_cap,
          "f=zero ratio spread " + fmt(spread) + " (<= 0.05; ratios " + fmt(rl.get("min_ratio")) + ".." +
              fmt(rl.get("max_ratio")) + "); allen_cahn max ratio " + fmt(mx) + " (<= frozen cap " +
              fmt(ac.probes.stability_ratio_cap) + ")"};
}

Outcome holder() {
  const Scenario sc = load_scenario(kConfigs / "regulation.json");
  SimConfig every = sc.config;
  every.snapshot_stride = 1;
  const ProbeReport r = holder_probe(simulate(every), sc.config.grid, sc.config.dt);
  const ProbeReport s = holder_sweep(sc.config, 5, 42, sc.probes.holder_spread_cap);
  const double alpha = r.get("alpha"), spread = s.get("c6_spread");
  return {alpha > 0.0 && spread <= 10.0,
          "relay demo alpha " + fmt(alpha) + " (> 0), c6 " + fmt(r.get("c6")) + "; c6 spread over 5 controls " +
              fmt(spread) + " (<= 10)"};
}

Outcome regulation() {
  const Trajectory tr = simulate(load_scenario(kConfigs / "regulation.json").config);
  const double ref = 0.5;
  const double e0 = std::abs(tr.readings(0, 0) - ref), e1 = std::abs(tr.readings(0, tr.readings.steps - 1) - ref);
  return {e1 < 0.5 * e0, "|final reading - u*| = " + fmt(e1) + " (< 0.5 x initial " + fmt(e0) + ")"};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("relaydiff_acc_det_" + std::to_string(::getpid()));
  std::size_t files = 0, differing = 0, failed_runs = 0;
  for (const auto& path : shipped_configs()) {
    const fs::path a = root / (path.stem().string() + "_a"), b = root / (path.stem().string() + "_b");
    for (const auto& d : {a, b})
      if (run_cli("simulate --config " + path.string() + " --out " + d.string()) != 0) ++failed_runs;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(b / fs::relative(e.path(), a))) ++differing;
    }
  }
  fs::remove_all(root);
  return {failed_runs == 0 && differing == 0 && files > 0,
          std::to_string(differing) + " of " + std::to_string(files) + " CSV files differ across two CLI runs (0)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"heat oracle", heat},
      {"controller exactness", controller_exactness},
      {"a-priori bounds", a_priori},
      {"selection validity", selection_validity},
      {"affinity of P", affinity},
      {"weight law", weight_law},
      {"picard fixed point", picard},
      {"stability estimate", stability},
      {"holder probe", holder},
      {"regulation demo", regulation},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
