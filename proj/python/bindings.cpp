#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "relaydiff/config.hpp"
#include "relaydiff/errors.hpp"
#include "relaydiff/io.hpp"
#include "relaydiff/loop.hpp"
#include "relaydiff/verify.hpp"

namespace py = pybind11;
using namespace relaydiff;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Tables are row-major (rows x steps), so the buffer is shared layout-for-layout.
Array to_array(const TimeTable& t) {
  Array a({t.rows, t.steps});
  std::copy(t.data.begin(), t.data.end(), a.mutable_data());
  return a;
}

Array to_array(const std::vector<double>& v) {
  Array a(v.size());
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

TimeTable to_table(const Array& a) {
  if (a.ndim() != 2) throw PreconditionError("control table must be a 2-D array (rows x steps)");
  TimeTable t(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::dict bounds_dict(const BoundsReport& b) {
  py::dict d;
  d["kappa_bound"] = b.kappa_bound;
  d["derivative_bound"] = b.derivative_bound;
  d["law_bound"] = b.law_bound;
  d["S"] = b.S;
  d["S_printed_formula"] = b.S_printed;
  d["printed_formula_differs"] = b.printed_formula_differs;
  return d;
}

py::dict probe_dict(const ProbeReport& r) {
  py::dict d, inputs, measured, tolerances;
  for (const auto& [k, v] : r.inputs) inputs[py::str(k)] = v;
  for (const auto& [k, v] : r.measured) measured[py::str(k)] = v;
  for (const auto& [k, v] : r.tolerances) tolerances[py::str(k)] = v;
  d["name"] = r.name;
  d["inputs"] = inputs;
  d["measured"] = measured;
  d["tolerances"] = tolerances;
  d["notes"] = r.notes;
  d["pass"] = r.pass;
  d["p"] = r.p;
  d["q"] = r.q;
  return d;
}

py::dict residual_dict(const ResidualBreakdown& r, double dt) {
  py::dict d;
  d["inclusion_defect"] = r.inclusion_defect;
  d["sensor_defect"] = r.sensor_defect;
  d["total"] = r.total;
  d["over_dt"] = r.total / dt;
  d["worst_step"] = r.worst_step;
  d["worst_controller"] = r.worst_row;
  return d;
}

}  // namespace

PYBIND11_MODULE(_relaydiff, m) {
  m.doc() = "Relay-feedback control of reaction-diffusion equations";

  // Never destroyed: the interpreter may outlive static destructors.
  static auto& config_error = *new py::exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  static auto& precondition_error = *new py::exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  static auto& numerical_error = *new py::exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::object exc = py::handle(config_error.ptr())(e.what());
      exc.attr("violations") = py::cast(e.violations());
      PyErr_SetObject(config_error.ptr(), exc.ptr());
    } catch (const PreconditionError& e) {
      PyErr_SetString(precondition_error.ptr(), e.what());
    } catch (const NumericalError& e) {
      py::object exc = py::handle(numerical_error.ptr())(e.what());
      exc.attr("residual") = e.residual();
      PyErr_SetObject(numerical_error.ptr(), exc.ptr());
    }
  });

  py::class_<Grid>(m, "Grid")
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("extents",
                             [](const Grid& g) {
                               std::vector<double> e;
                               for (int a = 0; a < g.dim(); ++a) e.push_back(g.extent(a));
                               return e;
                             })
      .def_property_readonly("counts",
                             [](const Grid& g) {
                               std::vector<std::size_t> c;
                               for (int a = 0; a < g.dim(); ++a) c.push_back(g.count(a));
                               return c;
                             })
      .def_property_readonly("weights", [](const Grid& g) { return to_array(g.weights()); })
      .def_property_readonly("coords", [](const Grid& g) {
        Array a({g.size(), static_cast<std::size_t>(g.dim())});
        auto r = a.mutable_unchecked<2>();
        for (std::size_t i = 0; i < g.size(); ++i)
          for (int ax = 0; ax < g.dim(); ++ax) r(i, ax) = g.coords(i)[ax];
        return a;
      });

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def_property_readonly("hash", [](const Scenario& s) { return hash_hex(s.hash); })
      .def_property_readonly("grid", [](const Scenario& s) { return s.config.grid; })
      .def_property_readonly("dt", [](const Scenario& s) { return s.config.dt; })
      .def_property_readonly("horizon", [](const Scenario& s) { return s.config.horizon; })
      .def_property_readonly("steps", [](const Scenario& s) { return s.config.steps(); })
      .def_property_readonly("controllers", [](const Scenario& s) { return s.config.controller.beta.size(); })
      .def_property_readonly("sensors", [](const Scenario& s) { return s.config.sensors.size(); })
      .def_property_readonly("bounds", [](const Scenario& s) { return bounds_dict(s.config.bounds()); })
      .def_readonly("canonical", &Scenario::canonical)
      .def("with_snapshot_stride",
           [](Scenario s, std::size_t stride) {
             s.config.snapshot_stride = stride;
             return s;
           },
           py::arg("stride"), "Copy with a different snapshot stride (0 picks one automatically).");

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("times", [](const Trajectory& t) { return to_array(t.times); })
      .def_property_readonly("kappa", [](const Trajectory& t) { return to_array(t.kappa); })
      .def_property_readonly("v", [](const Trajectory& t) { return to_array(t.v); })
      .def_property_readonly("readings", [](const Trajectory& t) { return to_array(t.readings); })
      .def_property_readonly("lo", [](const Trajectory& t) { return to_array(t.lo); })
      .def_property_readonly("hi", [](const Trajectory& t) { return to_array(t.hi); })
      .def_readonly("max_abs_u", &Trajectory::max_abs_u)
      .def_property_readonly("bounds", [](const Trajectory& t) { return bounds_dict(t.bounds); })
      .def_property_readonly("snapshots", [](const Trajectory& t) {
        py::list out;
        for (const auto& s : t.snapshots) out.append(py::make_tuple(s.step, s.time, to_array(s.values)));
        return out;
      });

  m.def("load_scenario", &load_scenario, py::arg("path"), "Load and validate a JSON scenario file.");
  m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("name") = "scenario",
        "Parse and validate a JSON scenario document.");

  m.def("simulate", [](const Scenario& s) {
        py::gil_scoped_release release;
        return simulate(s.config);
      },
      py::arg("scenario"), "Time-marched closed loop with sample-and-hold actuation.");

  m.def("picard", [](const Scenario& s) {
        PicardResult r;
        {
          py::gil_scoped_release release;
          r = picard_solve(s.config);
        }
        py::dict rep;
        rep["iterations"] = r.report.iterations;
        rep["residual_history"] = r.report.residual_history;
        rep["final_residual"] = r.report.final_residual;
        rep["converged"] = r.report.converged;
        rep["multivalued_law"] = r.report.multivalued_law;
        rep["selection_switches"] = r.report.selection_switches;
        rep["residual_increases"] = r.report.residual_increases;
        return py::make_tuple(r.trajectory, rep);
      },
      py::arg("scenario"), "Picard iteration on whole-horizon control tables; returns (trajectory, report).");

  m.def("residual", [](const Trajectory& t, const Scenario& s) { return residual_dict(residual(t, s.config), s.config.dt); },
        py::arg("trajectory"), py::arg("scenario"), "Discrete solution certificate of a trajectory.");

  m.def("solve_open_loop", [](const Scenario& s, const Array& kappa) {
        const TimeTable k = to_table(kappa);
        const OpenLoopResult r = solve_open_loop(s.config, k, 0);
        return py::make_tuple(to_array(r.readings), r.max_abs_u);
      },
      py::arg("scenario"), py::arg("kappa"), "Open-loop solve; returns (readings, max |u|).");

  m.def("affine_check", [](const Scenario& s, const Array& v1, const Array& v2, double lam) {
        return affine_check(s.config, to_table(v1), to_table(v2), lam);
      },
      py::arg("scenario"), py::arg("v1"), py::arg("v2"), py::arg("lam"));

  m.def("controller_step", &controller_step, py::arg("kappa"), py::arg("v"), py::arg("dt"), py::arg("beta"),
        "Exact step of beta k' + k = v with v held over the step.");
  m.def("controller_trajectory",
        [](const std::vector<double>& beta, const std::vector<double>& a, const Array& v, double dt) {
          return to_array(controller_trajectory(ControllerParams{beta, a}, to_table(v), dt));
        },
        py::arg("beta"), py::arg("a"), py::arg("v"), py::arg("dt"));
  m.def("a_priori_bounds",
        [](const std::vector<double>& beta, const std::vector<double>& a, const std::vector<double>& C) {
          return bounds_dict(a_priori_bounds(ControllerParams{beta, a}, C));
        },
        py::arg("beta"), py::arg("a"), py::arg("law_bounds"));

  m.def("heat_error", &heat_error, py::arg("dim"), py::arg("nodes"), py::arg("dt"), py::arg("horizon"),
        "Max nodal error of the solver against the decaying cosine.");
  m.def("heat_oracle", [](int dim) {
        HeatOracleOptions o;
        o.dim = dim;
        if (dim == 2) {
          o.accuracy_nodes = 65;
          o.temporal_nodes = 65;
        }
        return probe_dict(heat_oracle(o));
      },
      py::arg("dim") = 1);
  m.def("stability_probe", [](const Scenario& s, std::size_t pairs, std::uint64_t seed) {
        StabilityOptions o;
        o.pairs = pairs;
        o.seed = seed;
        o.ratio_cap = s.probes.stability_ratio_cap;
        return probe_dict(stability_probe(s.config, o));
      },
      py::arg("scenario"), py::arg("pairs") = 20, py::arg("seed") = 42);
  m.def("holder_probe", [](const Trajectory& t, const Scenario& s) {
        HolderOptions o;
        o.margin = s.probes.holder_margin;
        return probe_dict(holder_probe(t, s.config.grid, s.config.dt, o));
      },
      py::arg("trajectory"), py::arg("scenario"), "Requires a trajectory with snapshots at every step.");
  m.def("convergence_study", [](const Scenario& s, std::size_t levels) {
        ConvergenceOptions o;
        o.levels = levels;
        o.dt_factor = s.probes.convergence_dt_factor;
        return probe_dict(convergence_study(s.config, o));
      },
      py::arg("scenario"), py::arg("levels") = 3);

  m.def("write_trajectory", [](const std::filesystem::path& dir, const Trajectory& t, const Scenario& s) {
        write_trajectory(dir, t, s.config.grid);
      },
      py::arg("dir"), py::arg("trajectory"), py::arg("scenario"));
  m.def("read_trajectory", &read_trajectory, py::arg("dir"), "Rebuild the tables of a run directory.");
}
