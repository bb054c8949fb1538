#include "zonotube/invariant.hpp"
#include "zonotube/reachability.hpp"
#include "zonotube/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace zonotube;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["rmse_vx"] = m.rmse_vx;
  d["rmse_omega"] = m.rmse_omega;
  d["nrmse_vx"] = m.nrmse_vx;
  d["nrmse_omega"] = m.nrmse_omega;
  d["max_abs_e"] = Vector(m.max_abs_e);
  d["max_abs_w"] = Vector(m.max_abs_w);
  d["w_inside_fraction"] = m.w_inside_fraction;
  d["mean_solve_ms"] = m.mean_solve_ms;
  d["max_solve_ms"] = m.max_solve_ms;
  d["constraint_violations"] = m.constraint_violations;
  d["degraded_ticks"] = m.degraded_ticks;
  d["terminal_misses"] = m.terminal_misses;
  d["ticks"] = m.ticks;
  d["aborted"] = m.aborted;
  return d;
}

py::dict timing_dict(const TimingStats& t) {
  py::dict d;
  d["repetitions"] = t.repetitions;
  d["mean_us"] = t.mean_us;
  d["median_us"] = t.median_us;
  d["p99_us"] = t.p99_us;
  return d;
}

py::dict simulate(const std::string& gains_path, const std::string& scenario_path, const std::string& controller,
                  const std::string& anchor, const std::string& plant, double duration, py::object seed,
                  const std::string& out_dir) {
  const VehicleParams p;
  const GainSchedule gs = load_gains(gains_path);
  Scenario sc = scenario_path.empty() ? default_scenario(p) : load_scenario(scenario_path, p);
  if (controller == "lqr")
    sc.controller = LocalController::Lqr;
  else if (controller != "hinf")
    throw std::invalid_argument("controller must be 'hinf' or 'lqr'");
  if (anchor == "nominal")
    sc.sim.anchor = AnchorMode::Nominal;
  else if (anchor != "measured")
    throw std::invalid_argument("anchor must be 'measured' or 'nominal'");
  if (plant == "linear")
    sc.sim.plant = PlantKind::Linear;
  else if (plant != "nonlinear")
    throw std::invalid_argument("plant must be 'nonlinear' or 'linear'");
  if (duration > 0.0) sc.duration = duration;
  if (!seed.is_none()) sc.seed = seed.cast<std::uint64_t>();
  if (sc.controller == LocalController::Lqr && !gs.k_lqr)
    throw std::invalid_argument("gains file has no LQR gains");

  RunLog log;
  {
    py::gil_scoped_release release;
    log = run_scenario(sc, gs, p);
  }
  const Metrics m = compute_metrics(log, sc);
  if (!out_dir.empty()) {
    write_run_csv(log, out_dir + "/run.csv");
    write_ticks_csv(log, out_dir + "/ticks.csv");
  }
  py::dict d = metrics_dict(m);
  d["message"] = log.message;
  return d;
}

}  // namespace

PYBIND11_MODULE(_zonotube, mod) {
  mod.doc() = "Zonotopic tube LPV-MPC core";

  py::class_<Zonotope>(mod, "Zonotope")
      .def(py::init<Vector, Matrix>(), py::arg("center"), py::arg("generators"))
      .def_static("from_box", [](const Vector& lo, const Vector& hi) { return Zonotope::from_box(Box(lo, hi)); })
      .def_property_readonly("center", &Zonotope::center)
      .def_property_readonly("generators", &Zonotope::generators)
      .def_property_readonly("dim", &Zonotope::dim)
      .def_property_readonly("num_generators", &Zonotope::num_generators)
      .def("support", [](const Zonotope& z, const Vector& d) { return support(z, d); })
      .def("interval_hull",
           [](const Zonotope& z) {
             const Box b = interval_hull(z);
             return py::make_tuple(b.lower(), b.upper());
           })
      .def("contains", [](const Zonotope& z, const Vector& x, double tol) { return contains_point(z, x, tol); },
           py::arg("x"), py::arg("tol") = 1e-9)
      .def("__repr__", [](const Zonotope& z) {
        return "<Zonotope dim=" + std::to_string(z.dim()) + " generators=" + std::to_string(z.num_generators()) +
               ">";
      });

  mod.def("minkowski_sum", &minkowski_sum);
  mod.def("linear_image", &linear_image);
  mod.def("reduce_generators", &reduce_generators, py::arg("z"), py::arg("p_max"));
  mod.def("erode_box",
          [](const Vector& lo, const Vector& hi, const Zonotope& z) {
            const Box b = box_erode_zonotope(Box(lo, hi), z);
            return py::make_tuple(b.lower(), b.upper(), b.is_empty());
          },
          "Per-axis erosion of the box [lo, hi] by a zonotope: (lower, upper, empty).");

  mod.def("lpv_matrices",
          [](const Vector& x, const Vector& u) {
            const LpvMatrices m = lpv_at(x, u, VehicleParams{});
            return py::make_tuple(Matrix(m.a), Matrix(m.b));
          },
          py::arg("x"), py::arg("u"), "A and B of the LPV realization at an operating point.");
  mod.def("lpv_derivatives",
          [](const Vector& x, const Vector& u) { return Vector(lpv_derivatives(x, u, VehicleParams{})); },
          py::arg("x"), py::arg("u"));

  mod.def("disturbance_bounds", &default_disturbance_bounds);

  py::class_<GainSchedule>(mod, "GainSchedule")
      .def_static("load", &load_gains, py::arg("path"))
      .def_property_readonly("k", [](const GainSchedule& g) {
        std::vector<Matrix> out;
        for (const auto& k : g.k) out.emplace_back(k);
        return out;
      })
      .def_property_readonly("k_lqr", [](const GainSchedule& g) -> py::object {
        if (!g.k_lqr) return py::none();
        std::vector<Matrix> out;
        for (const auto& k : *g.k_lqr) out.emplace_back(k);
        return py::cast(out);
      })
      .def_property_readonly("p", [](const GainSchedule& g) { return Matrix(g.p); })
      .def_property_readonly("gamma", [](const GainSchedule& g) { return g.gamma; })
      .def_property_readonly("terminal_set", [](const GainSchedule& g) -> py::object {
        if (!g.terminal) return py::none();
        return py::cast(g.terminal->set);
      })
      .def("gain_at", [](const GainSchedule& g, const Eigen::Vector3d& zeta) { return Matrix(gain_at(zeta, g)); })
      .def("spectral_radii", [](const GainSchedule& g) { return vertex_spectral_radii(g, VehicleParams{}); });

  mod.def(
      "terminal_set",
      [](const GainSchedule& g, double epsilon) {
        const ClosedLoopFamily f = closed_loop_family(g, VehicleParams{}, disturbance_set(default_disturbance_bounds()));
        RpiOptions opt;
        opt.epsilon = epsilon;
        TerminalSetReport r;
        {
          py::gil_scoped_release release;
          r = compute_terminal_set(f, opt);
        }
        py::dict d;
        d["set"] = r.mrpi.set;
        d["epsilon_achieved"] = r.mrpi.epsilon_achieved;
        d["inflation"] = r.mrpi.inflation;
        d["iterations"] = r.mrpi.iterations;
        d["p_star"] = r.e0.p_star;
        d["rpi"] = check_rpi(f, r.mrpi.set, r.mrpi.epsilon_achieved);
        return d;
      },
      py::arg("gains"), py::arg("epsilon") = 1e-4, "Recompute chi_f for a gain schedule.");

  mod.def(
      "benchmark_tube",
      [](const GainSchedule& g, int hp, int reps, int poly_reps) {
        const auto tr = benchmark_transitions(g, VehicleParams{}, hp);
        TubeBenchmark b;
        {
          py::gil_scoped_release release;
          b = benchmark_tube(tr, disturbance_set(default_disturbance_bounds()), reps, poly_reps);
        }
        py::dict d;
        d["zonotope"] = timing_dict(b.zonotope);
        d["polytope"] = timing_dict(b.polytope);
        d["speedup"] = b.speedup;
        d["final_generators"] = b.final_generators;
        d["final_vertices"] = b.final_vertices;
        d["max_support_gap"] = b.max_support_gap;
        return d;
      },
      py::arg("gains"), py::arg("hp") = 5, py::arg("reps") = 1000, py::arg("poly_reps") = 5);

  mod.def("simulate", &simulate, py::arg("gains_path"), py::arg("scenario_path") = "",
          py::arg("controller") = "hinf", py::arg("anchor") = "measured", py::arg("plant") = "nonlinear",
          py::arg("duration") = 0.0, py::arg("seed") = py::none(), py::arg("out_dir") = "",
          "Run a closed-loop scenario and return its metrics.");
}
