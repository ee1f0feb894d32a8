#include "relaydiff/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relaydiff/errors.hpp"

namespace relaydiff {

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Walks the document, recording every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  // Reports keys of `obj` not in `allowed`.
  void keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : obj.items())
      if (!ok.count(k)) errors.push_back(path + "." + k + ": unknown key");
  }

  template <class T>
  T get(const json& obj, const std::string& path, const char* key, T fallback, bool required = false) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) errors.push_back(path + "." + key + ": required key missing");
      return fallback;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(path + "." + key + ": wrong type");
      return fallback;
    }
  }

  template <class T>
  T need(const json& obj, const std::string& path, const char* key) {
    return get<T>(obj, path, key, T{}, true);
  }

  const json& sub(const json& obj, const std::string& path, const char* key, bool required = true) {
    static const json empty = json::object();
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) errors.push_back(path + "." + key + ": required section missing");
      return empty;
    }
    return obj.at(key);
  }
};

Point read_point(Reader& rd, const json& obj, const std::string& path, const char* key, int dim) {
  const auto v = rd.need<std::vector<double>>(obj, path, key);
  Point p{0.0, 0.0};
  if (v.size() != static_cast<std::size_t>(dim)) {
    rd.errors.push_back(path + "." + key + ": expected " + std::to_string(dim) + " coordinates");
    return p;
  }
  for (int a = 0; a < dim; ++a) p[a] = v[a];
  return p;
}

ReactionTerm read_reaction(Reader& rd, const json& r, SimConfig& c) {
  rd.keys(r, "reaction", {"kind", "lambda", "growth"});
  const auto kind = rd.need<std::string>(r, "reaction", "kind");
  ReactionTerm f = ReactionTerm::zero();
  if (kind == "zero") {
    f = ReactionTerm::zero();
  } else if (kind == "linear") {
    f = ReactionTerm::linear(rd.need<double>(r, "reaction", "lambda"));
  } else if (kind == "allen_cahn") {
    f = ReactionTerm::allen_cahn();
  } else if (!kind.empty()) {
    rd.errors.push_back("reaction.kind: unknown reaction '" + kind + "' (zero, linear, allen_cahn)");
  }
  if (kind != "linear" && r.is_object() && r.contains("lambda"))
    rd.errors.push_back("reaction.lambda: only valid for the linear reaction");
  if (r.is_object() && r.contains("growth")) {
    const json& g = r.at("growth");
    rd.keys(g, "reaction.growth", {"c1", "c2", "range", "samples"});
    const auto def = f.default_cert();
    c.growth_cert = GrowthCert{rd.get<double>(g, "reaction.growth", "c1", def.c1),
                               rd.get<double>(g, "reaction.growth", "c2", def.c2)};
    const auto range = rd.get<std::vector<double>>(g, "reaction.growth", "range", {-10.0, 10.0});
    if (range.size() == 2)
      c.growth_range = {range[0], range[1]};
    else
      rd.errors.push_back("reaction.growth.range: expected [min, max]");
    c.growth_samples = rd.get<std::size_t>(g, "reaction.growth", "samples", 2001);
  }
  return f;
}

PiecewiseLinear read_weight(Reader& rd, const json& e, const std::string& path) {
  if (e.is_number()) return PiecewiseLinear::constant(e.get<double>());
  rd.keys(e, path, {"t_seconds", "value"});
  PiecewiseLinear w;
  w.times = rd.need<std::vector<double>>(e, path, "t_seconds");
  w.values = rd.need<std::vector<double>>(e, path, "value");
  if (w.times.empty() || w.times.size() != w.values.size()) {
    rd.errors.push_back(path + ": t_seconds and value must be nonempty and equally long");
    return PiecewiseLinear::constant(0.0);
  }
  return w;
}

}  // namespace

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Scenario parse_scenario(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader rd;
  rd.keys(doc, "config",
          {"name", "grid", "time", "reaction", "state_cap", "initial_state", "actuators", "sensors", "feedback",
           "controller", "solver", "output", "integrability", "probes"});

  Scenario sc;
  sc.name = rd.get<std::string>(doc, "config", "name", name);
  SimConfig& c = sc.config;

  // grid
  const json& g = rd.sub(doc, "config", "grid");
  rd.keys(g, "grid", {"dim", "extent_length", "nodes"});
  const std::size_t grid_errors = rd.errors.size();
  const int dim = rd.need<int>(g, "grid", "dim");
  const auto ext = rd.need<std::vector<double>>(g, "grid", "extent_length");
  const auto nodes = rd.need<std::vector<std::size_t>>(g, "grid", "nodes");
  if ((dim == 1 || dim == 2) && ext.size() == static_cast<std::size_t>(dim) &&
      nodes.size() == static_cast<std::size_t>(dim)) {
    try {
      c.grid = Grid(dim, {ext[0], dim == 2 ? ext[1] : 0.0}, {nodes[0], dim == 2 ? nodes[1] : 1});
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) rd.errors.push_back("grid: " + v);
    }
  } else if (g.is_object() && rd.errors.size() == grid_errors) {
    rd.errors.push_back("grid: dim must be 1 or 2 with one extent and node count per axis");
  }
  const int d = c.grid.dim();

  // time
  const json& t = rd.sub(doc, "config", "time");
  rd.keys(t, "time", {"horizon_seconds", "dt_seconds"});
  c.horizon = rd.need<double>(t, "time", "horizon_seconds");
  c.dt = rd.need<double>(t, "time", "dt_seconds");

  c.reaction = read_reaction(rd, rd.sub(doc, "config", "reaction"), c);
  c.state_cap = rd.get<double>(doc, "config", "state_cap", c.state_cap);

  // initial state
  const json& u0 = rd.sub(doc, "config", "initial_state");
  rd.keys(u0, "initial_state", {"profile", "value", "amplitude", "values"});
  const auto profile = rd.need<std::string>(u0, "initial_state", "profile");
  if (profile == "constant") {
    c.u0 = {InitialProfile::Kind::constant, rd.get<double>(u0, "initial_state", "value", 0.0), {}};
  } else if (profile == "cosine") {
    c.u0 = {InitialProfile::Kind::cosine, rd.get<double>(u0, "initial_state", "amplitude", 1.0), {}};
  } else if (profile == "table") {
    c.u0 = {InitialProfile::Kind::table, 0.0, rd.need<std::vector<double>>(u0, "initial_state", "values")};
    if (c.u0.values.size() != c.grid.size()) {
      rd.errors.push_back("initial_state.values: expected one value per node (" + std::to_string(c.grid.size()) +
                          ")");
      c.u0 = {};
    }
  } else if (!profile.empty()) {
    rd.errors.push_back("initial_state.profile: unknown profile '" + profile + "' (constant, cosine, table)");
  }

  // actuators
  std::vector<ActuatorProfile> profiles;
  const json& acts = rd.sub(doc, "config", "actuators");
  if (!acts.is_array()) {
    rd.errors.push_back("actuators: expected a list");
  } else {
    for (std::size_t j = 0; j < acts.size(); ++j) {
      const std::string path = "actuators[" + std::to_string(j) + "]";
      const json& a = acts[j];
      rd.keys(a, path, {"shape", "center_length", "width_length", "radius_length", "amplitude", "envelope"});
      ActuatorProfile p;
      const auto shape = rd.need<std::string>(a, path, "shape");
      if (shape == "gaussian") {
        p.shape = ActuatorProfile::Shape::gaussian;
        p.width = rd.need<double>(a, path, "width_length");
      } else if (shape == "indicator") {
        p.shape = ActuatorProfile::Shape::indicator;
        p.width = rd.need<double>(a, path, "radius_length");
      } else {
        rd.errors.push_back(path + ".shape: unknown shape '" + shape + "' (gaussian, indicator)");
      }
      if (shape == "gaussian" && a.contains("radius_length"))
        rd.errors.push_back(path + ".radius_length: gaussian actuators take width_length");
      if (shape == "indicator" && a.contains("width_length"))
        rd.errors.push_back(path + ".width_length: indicator actuators take radius_length");
      p.center = read_point(rd, a, path, "center_length", d);
      p.amplitude = rd.get<double>(a, path, "amplitude", 1.0);
      if (a.is_object() && a.contains("envelope")) {
        const json& e = a.at("envelope");
        rd.keys(e, path + ".envelope", {"kind", "tau_seconds"});
        const auto kind = rd.need<std::string>(e, path + ".envelope", "kind");
        if (kind == "constant") {
          p.envelope = {};
        } else if (kind == "ramp") {
          p.envelope = {Envelope::Kind::ramp, rd.need<double>(e, path + ".envelope", "tau_seconds")};
        } else {
          rd.errors.push_back(path + ".envelope.kind: unknown envelope '" + kind + "' (constant, ramp)");
        }
      }
      profiles.push_back(p);
    }
  }
  c.bank = ActuatorBank(std::move(profiles));

  // sensors
  const json& sens = rd.sub(doc, "config", "sensors");
  if (!sens.is_array()) {
    rd.errors.push_back("sensors: expected a list");
  } else {
    for (std::size_t k = 0; k < sens.size(); ++k) {
      const std::string path = "sensors[" + std::to_string(k) + "]";
      rd.keys(sens[k], path, {"position_length", "reference"});
      c.sensors.points.push_back(read_point(rd, sens[k], path, "position_length", d));
      c.sensors.references.push_back(rd.need<double>(sens[k], path, "reference"));
    }
  }

  // feedback
  const json& fb = rd.sub(doc, "config", "feedback");
  rd.keys(fb, "feedback", {"relay", "delta", "weights", "selection"});
  const auto relay_mode = rd.need<std::string>(fb, "feedback", "relay");
  if (relay_mode == "strict") {
    c.relays = RelaySpec::strict();
  } else if (relay_mode == "convexified") {
    c.relays = RelaySpec::convexified();
  } else if (relay_mode == "smoothed") {
    c.relays = RelaySpec::smoothed(rd.need<double>(fb, "feedback", "delta"));
  } else if (!relay_mode.empty()) {
    rd.errors.push_back("feedback.relay: unknown relay '" + relay_mode + "' (strict, convexified, smoothed)");
  }
  if (relay_mode != "smoothed" && fb.is_object() && fb.contains("delta"))
    rd.errors.push_back("feedback.delta: only valid for the smoothed relay");

  if (fb.is_object() && fb.contains("weights")) {
    const json& w = fb.at("weights");
    bool shape_ok = w.is_array() && !w.empty();
    std::size_t cols = shape_ok && w[0].is_array() ? w[0].size() : 0;
    std::vector<PiecewiseLinear> entries;
    if (shape_ok) {
      for (std::size_t j = 0; j < w.size() && shape_ok; ++j) {
        if (!w[j].is_array() || w[j].size() != cols) {
          shape_ok = false;
          break;
        }
        for (std::size_t k = 0; k < cols; ++k)
          entries.push_back(read_weight(rd, w[j][k], "feedback.weights[" + std::to_string(j) + "][" +
                                                         std::to_string(k) + "]"));
      }
    }
    if (!shape_ok || cols == 0) {
      rd.errors.push_back("feedback.weights: expected a rectangular list of rows (one per actuator)");
    } else {
      try {
        c.alpha = WeightMatrix(w.size(), cols, std::move(entries));
      } catch (const ConfigError& e) {
        for (const auto& v : e.violations()) rd.errors.push_back("feedback.weights: " + v);
      }
    }
  } else {
    rd.errors.push_back("feedback.weights: required key missing");
  }

  const json& sel = rd.sub(fb, "feedback", "selection");
  rd.keys(sel, "feedback.selection", {"kind", "band"});
  const auto sk = rd.need<std::string>(sel, "feedback.selection", "kind");
  static const std::pair<const char*, SelectionStrategy::Kind> kinds[] = {
      {"midpoint", SelectionStrategy::Kind::midpoint},
      {"prefer_zero", SelectionStrategy::Kind::prefer_zero},
      {"prefer_previous", SelectionStrategy::Kind::prefer_previous},
      {"extreme_lo", SelectionStrategy::Kind::extreme_lo},
      {"extreme_hi", SelectionStrategy::Kind::extreme_hi},
      {"hysteresis", SelectionStrategy::Kind::hysteresis}};
  bool found = sk.empty();
  for (const auto& [n, k] : kinds)
    if (sk == n) {
      c.strategy.kind = k;
      found = true;
    }
  if (!found) rd.errors.push_back("feedback.selection.kind: unknown strategy '" + sk + "'");
  if (c.strategy.kind == SelectionStrategy::Kind::hysteresis)
    c.strategy.band = rd.need<double>(sel, "feedback.selection", "band");
  else if (sel.is_object() && sel.contains("band"))
    rd.errors.push_back("feedback.selection.band: only valid for hysteresis");

  // controller
  const json& ctl = rd.sub(doc, "config", "controller");
  rd.keys(ctl, "controller", {"beta_seconds", "initial"});
  c.controller.beta = rd.need<std::vector<double>>(ctl, "controller", "beta_seconds");
  c.controller.initial =
      rd.get<std::vector<double>>(ctl, "controller", "initial", std::vector<double>(c.controller.beta.size(), 0.0));

  // solver, output, integrability: all optional
  const json& sol = rd.sub(doc, "config", "solver", false);
  rd.keys(sol, "solver",
          {"picard_tol", "picard_max_iter", "picard_damping", "linear_solver_tol", "linear_solver_max_iter"});
  c.tol.picard_tol = rd.get<double>(sol, "solver", "picard_tol", c.tol.picard_tol);
  c.tol.picard_max_iter = rd.get<std::size_t>(sol, "solver", "picard_max_iter", c.tol.picard_max_iter);
  c.tol.picard_damping = rd.get<double>(sol, "solver", "picard_damping", c.tol.picard_damping);
  c.tol.linear_solver_tol = rd.get<double>(sol, "solver", "linear_solver_tol", c.tol.linear_solver_tol);
  c.tol.linear_solver_max_iter =
      rd.get<std::size_t>(sol, "solver", "linear_solver_max_iter", c.tol.linear_solver_max_iter);

  const json& out = rd.sub(doc, "config", "output", false);
  rd.keys(out, "output", {"snapshot_stride"});
  c.snapshot_stride = rd.get<std::size_t>(out, "output", "snapshot_stride", 0);

  const json& integ = rd.sub(doc, "config", "integrability", false);
  rd.keys(integ, "integrability", {"p", "q"});
  c.p = rd.get<double>(integ, "integrability", "p", 0.0);
  c.q = rd.get<double>(integ, "integrability", "q", 2.0);

  const json& pr = rd.sub(doc, "config", "probes", false);
  rd.keys(pr, "probes",
          {"stability_pairs", "stability_ratio_cap", "holder_margin", "holder_controls", "holder_spread_cap",
           "convergence_levels", "convergence_dt_factor"});
  ProbeSettings& ps = sc.probes;
  ps.stability_pairs = rd.get<std::size_t>(pr, "probes", "stability_pairs", ps.stability_pairs);
  ps.stability_ratio_cap = rd.get<double>(pr, "probes", "stability_ratio_cap", ps.stability_ratio_cap);
  ps.holder_margin = rd.get<double>(pr, "probes", "holder_margin", ps.holder_margin);
  ps.holder_controls = rd.get<std::size_t>(pr, "probes", "holder_controls", ps.holder_controls);
  ps.holder_spread_cap = rd.get<double>(pr, "probes", "holder_spread_cap", ps.holder_spread_cap);
  ps.convergence_levels = rd.get<std::size_t>(pr, "probes", "convergence_levels", ps.convergence_levels);
  ps.convergence_dt_factor = rd.get<double>(pr, "probes", "convergence_dt_factor", ps.convergence_dt_factor);

  // Structural errors first; semantic checks only make sense on a complete config.
  if (rd.errors.empty()) {
    for (auto& v : c.validate()) rd.errors.push_back(std::move(v));
  }
  if (!rd.errors.empty()) throw ConfigError(std::move(rd.errors));

  sc.canonical = doc.dump();
  sc.hash = fnv1a(sc.canonical);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.stem().string());
}

}  // namespace relaydiff
