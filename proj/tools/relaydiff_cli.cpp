// relaydiff: run closed-loop simulations, Picard solves and verification probes
// from a JSON scenario file.
//
//   relaydiff validate --config configs/zero.json --out runs/zero
//   relaydiff simulate --config configs/regulation.json --out runs/reg
//   relaydiff picard   --config configs/picard_smoothed.json --out runs/pic --strict
//   relaydiff residual --config configs/regulation.json --run runs/reg --out runs/reg-res
//   relaydiff verify heat --out runs/heat
//   relaydiff sweep    --config a.json --config b.json --out runs/sweep --threads 4

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "relaydiff/config.hpp"
#include "relaydiff/errors.hpp"
#include "relaydiff/io.hpp"
#include "relaydiff/verify.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace relaydiff;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigInvalid = 2, kNumerical = 3, kNotConverged = 4 };

struct Options {
  std::vector<std::string> configs;
  std::string out;
  std::string run_dir;
  std::string probe;
  std::size_t stride = 0;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  bool strict = false;
};

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ojson bounds_json(const BoundsReport& b) {
  ojson j;
  j["kappa_bound"] = b.kappa_bound;
  j["derivative_bound"] = b.derivative_bound;
  j["law_bound"] = b.law_bound;
  j["S"] = b.S;
  j["S_printed_formula"] = b.S_printed;
  j["printed_formula_differs"] = b.printed_formula_differs;
  return j;
}

ojson probe_json(const ProbeReport& r) {
  ojson j;
  j["name"] = r.name;
  j["pass"] = r.pass;
  ojson inputs = ojson::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  ojson m = ojson::object();
  for (const auto& [k, v] : r.measured) m[k] = v;
  j["measured"] = m;
  ojson t = ojson::object();
  for (const auto& [k, v] : r.tolerances) t[k] = v;
  j["tolerances"] = t;
  j["notes"] = r.notes;
  j["metadata"] = {{"p", r.p}, {"q", r.q}};
  return j;
}

ojson residual_json(const ResidualBreakdown& r, double dt) {
  return {{"inclusion_defect", r.inclusion_defect},
          {"sensor_defect", r.sensor_defect},
          {"total", r.total},
          {"over_dt", r.total / dt},
          {"worst_step", r.worst_step},
          {"worst_controller", r.worst_row + 1}};
}

std::size_t selection_violations(const Trajectory& tr) {
  std::size_t bad = 0;
  for (std::size_t j = 0; j < tr.v.rows; ++j)
    for (std::size_t n = 0; n < tr.v.steps; ++n)
      if (!(tr.lo(j, n) <= tr.v(j, n) && tr.v(j, n) <= tr.hi(j, n))) ++bad;
  return bad;
}

class Run {
 public:
  Run(std::string subcommand, fs::path out) : sub_(std::move(subcommand)), out_(std::move(out)) {
    fs::create_directories(out_);
  }

  void set_scenario(const Scenario& sc) {
    hash_ = hash_hex(sc.hash);
    name_ = sc.name;
  }
  void output(const std::string& name) { outputs_.push_back(name); }

  void finish() {
    ojson m;
    m["artifact"] = "relaydiff";
    m["artifact_version"] = kVersion;
    m["subcommand"] = sub_;
    m["scenario"] = name_;
    m["config_hash"] = hash_;
    m["outputs"] = outputs_;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(out_ / "manifest.json", m);
  }

  const fs::path& dir() const { return out_; }

 private:
  std::string sub_;
  fs::path out_;
  std::string hash_, name_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Scenario load(const Options& o) {
  if (o.configs.empty()) throw ConfigError("--config is required for this subcommand");
  Scenario sc = load_scenario(o.configs.front());
  if (o.stride > 0) sc.config.snapshot_stride = o.stride;
  return sc;
}

void write_run_tables(Run& run, const Trajectory& tr, const Grid& grid) {
  write_trajectory(run.dir(), tr, grid);
  for (const char* f : {"kappa.csv", "v.csv", "readings.csv", "intervals.csv", "snapshots/"}) run.output(f);
}

ojson trajectory_summary(const Scenario& sc, const Trajectory& tr) {
  const SimConfig& c = sc.config;
  const auto ms = in_M_S(tr.kappa, tr.bounds.S, c.dt, c.controller, c.law_bounds());
  ojson j;
  j["steps"] = c.steps();
  j["dt_seconds"] = c.dt;
  j["max_abs_u"] = tr.max_abs_u;
  j["state_cap"] = c.state_cap;
  j["references"] = c.sensors.references;
  j["selection_violations"] = selection_violations(tr);
  j["in_M_S"] = ms.pass;
  if (!ms.pass) j["in_M_S_violation"] = ms.what;
  j["bounds"] = bounds_json(tr.bounds);
  const auto ab = lipschitz_bound(c.bank, c.grid, c.horizon, tr.bounds.S, c.lp_exponent(), c.q, c.steps());
  j["actuation"] = {{"c3", ab.c3}, {"c4", ab.c4}, {"warnings", ab.warnings}};
  j["integrability"] = {{"p", c.lp_exponent()}, {"q", c.q}};
  return j;
}

int cmd_validate(const Options& o) {
  Run run("validate", o.out);
  Scenario sc = load(o);
  run.set_scenario(sc);
  run.finish();
  std::cout << sc.name << ": valid (hash " << hash_hex(sc.hash) << ")\n";
  return kOk;
}

int cmd_simulate(const Options& o) {
  Run run("simulate", o.out);
  Scenario sc = load(o);
  run.set_scenario(sc);
  const Trajectory tr = simulate(sc.config);
  write_run_tables(run, tr, sc.config.grid);
  ojson rep = trajectory_summary(sc, tr);
  rep["residual"] = residual_json(residual(tr, sc.config), sc.config.dt);
  write_json(run.dir() / "report.json", rep);
  run.output("report.json");
  run.finish();
  return kOk;
}

int cmd_picard(const Options& o) {
  Run run("picard", o.out);
  Scenario sc = load(o);
  run.set_scenario(sc);
  const PicardResult pr = picard_solve(sc.config);
  write_run_tables(run, pr.trajectory, sc.config.grid);
  {
    std::ofstream out(run.dir() / "residual.csv", std::ios::binary);
    out << "iteration,residual\n";
    for (std::size_t i = 0; i < pr.report.residual_history.size(); ++i)
      out << i + 1 << ',' << format_double(pr.report.residual_history[i]) << '\n';
    run.output("residual.csv");
  }
  ojson rep = trajectory_summary(sc, pr.trajectory);
  const auto& r = pr.report;
  rep["picard"] = {{"iterations", r.iterations},
                   {"converged", r.converged},
                   {"final_residual", r.final_residual},
                   {"picard_tol", sc.config.tol.picard_tol},
                   {"residual_history", r.residual_history},
                   {"residual_increases", r.residual_increases},
                   {"multivalued_law", r.multivalued_law},
                   {"selection_switches", r.selection_switches}};
  if (!r.converged && r.multivalued_law)
    rep["picard"]["note"] = "relay law is discontinuous/set-valued; non-convergence (chattering) is expected";
  write_json(run.dir() / "report.json", rep);
  run.output("report.json");
  run.finish();
  if (!r.converged) std::cerr << "picard: not converged after " << r.iterations << " iterations\n";
  return (!r.converged && o.strict) ? kNotConverged : kOk;
}

int cmd_residual(const Options& o) {
  Run run("residual", o.out);
  Scenario sc = load(o);
  run.set_scenario(sc);
  Trajectory tr = o.run_dir.empty() ? simulate(sc.config) : read_trajectory(o.run_dir);
  const auto res = residual(tr, sc.config);
  ojson rep;
  rep["source"] = o.run_dir.empty() ? "simulate" : o.run_dir;
  rep["residual"] = residual_json(res, sc.config.dt);
  write_json(run.dir() / "report.json", rep);
  run.output("report.json");
  run.finish();
  std::cout << "residual " << format_double(res.total) << '\n';
  return kOk;
}

int cmd_verify(const Options& o) {
  Run run("verify " + o.probe, o.out);
  ojson rep;
  bool pass = true;
  if (o.probe == "heat") {
    HeatOracleOptions ho;
    if (!o.configs.empty()) {
      const Scenario sc = load(o);
      run.set_scenario(sc);
      ho.dim = sc.config.grid.dim();
      ho.accuracy_nodes = sc.config.grid.count(0);
      ho.accuracy_dt = sc.config.dt;
      ho.horizon = sc.config.horizon;
    }
    if (ho.dim == 2) {
      ho.accuracy_nodes = std::min<std::size_t>(ho.accuracy_nodes, 65);
      ho.temporal_nodes = 65;
    }
    const ProbeReport r = heat_oracle(ho);
    rep = probe_json(r);
    pass = r.pass;
  } else {
    const Scenario sc = load(o);
    run.set_scenario(sc);
    const SimConfig& c = sc.config;
    if (o.probe == "stability") {
      StabilityOptions so;
      so.pairs = sc.probes.stability_pairs;
      so.seed = o.seed;
      so.ratio_cap = sc.probes.stability_ratio_cap;
      const ProbeReport r = stability_probe(c, so);
      rep = probe_json(r);
      pass = r.pass;
    } else if (o.probe == "holder") {
      SimConfig every = c;
      every.snapshot_stride = 1;
      HolderOptions ho;
      ho.margin = sc.probes.holder_margin;
      const ProbeReport r = holder_probe(simulate(every), c.grid, c.dt, ho);
      const ProbeReport s = holder_sweep(c, sc.probes.holder_controls, o.seed, sc.probes.holder_spread_cap, ho);
      rep["trajectory"] = probe_json(r);
      rep["control_sweep"] = probe_json(s);
      pass = r.pass && s.pass;
    } else if (o.probe == "convergence") {
      ConvergenceOptions co;
      co.levels = sc.probes.convergence_levels;
      co.dt_factor = sc.probes.convergence_dt_factor;
      const ProbeReport r = convergence_study(c, co);
      rep = probe_json(r);
      pass = r.pass;
    } else {
      throw ConfigError("unknown probe '" + o.probe + "' (heat, stability, holder, convergence)");
    }
  }
  write_json(run.dir() / "report.json", rep);
  run.output("report.json");
  run.finish();
  std::cout << o.probe << ": " << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kOk : kFailure;
}

int cmd_sweep(const Options& o) {
  if (o.configs.empty()) throw ConfigError("sweep needs at least one --config");
  // Validate everything before starting any work.
  std::vector<Scenario> scenarios;
  std::vector<std::string> problems;
  for (const auto& path : o.configs) {
    try {
      scenarios.push_back(load_scenario(path));
      if (o.stride > 0) scenarios.back().config.snapshot_stride = o.stride;
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) problems.push_back(path + ": " + v);
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  Run run("sweep", o.out);
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(scenarios.size(), kOk);
  std::vector<std::string> errors(scenarios.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      const Scenario& sc = scenarios[i];
      try {
        Run sub("simulate", run.dir() / sc.name);
        sub.set_scenario(sc);
        const Trajectory tr = simulate(sc.config);
        write_run_tables(sub, tr, sc.config.grid);
        ojson rep = trajectory_summary(sc, tr);
        rep["residual"] = residual_json(residual(tr, sc.config), sc.config.dt);
        write_json(sub.dir() / "report.json", rep);
        sub.output("report.json");
        sub.finish();
      } catch (const NumericalError& e) {
        codes[i] = kNumerical;
        errors[i] = e.what();
      } catch (const std::exception& e) {
        codes[i] = kFailure;
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(o.threads, static_cast<unsigned>(scenarios.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  int code = kOk;
  ojson summary = ojson::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    run.output(scenarios[i].name + "/");
    summary.push_back({{"scenario", scenarios[i].name}, {"exit", codes[i]}, {"error", errors[i]}});
    if (codes[i] != kOk) {
      std::cerr << scenarios[i].name << ": " << errors[i] << '\n';
      code = std::max(code, codes[i]);
    }
  }
  write_json(run.dir() / "report.json", summary);
  run.output("report.json");
  run.finish();
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaydiff: relay-feedback controlled reaction-diffusion simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.configs, "Scenario file (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--stride", o.stride, "Snapshot stride in steps (0 = automatic)");
  };
  auto* validate = app.add_subcommand("validate", "Check a scenario file and write a manifest");
  common(validate, true);
  auto* sim = app.add_subcommand("simulate", "Time-marched closed loop");
  common(sim, true);
  auto* pic = app.add_subcommand("picard", "Picard iteration on whole-horizon control tables");
  common(pic, true);
  pic->add_flag("--strict", o.strict, "Exit with code 4 when the iteration does not converge");
  auto* res = app.add_subcommand("residual", "Discrete solution residual of a run");
  common(res, true);
  res->add_option("--run", o.run_dir, "Run directory with kappa.csv/v.csv/readings.csv (default: simulate)");
  auto* ver = app.add_subcommand("verify", "Numerical probes");
  ver->add_option("probe", o.probe, "heat | stability | holder | convergence")->required();
  common(ver, false);
  ver->add_option("--seed", o.seed, "Random seed for probes");
  auto* sweep = app.add_subcommand("sweep", "Simulate several scenarios in a worker pool");
  common(sweep, true);
  sweep->add_option("--threads", o.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigInvalid;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*sim) return cmd_simulate(o);
    if (*pic) return cmd_picard(o);
    if (*res) return cmd_residual(o);
    if (*ver) return cmd_verify(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigInvalid;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << '\n';
    return kConfigInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
