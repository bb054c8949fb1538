// zonotube command-line tool. Exit codes: 0 success, 1 error, 2 the
// controller stayed in degraded mode (simulate only).

#include "zonotube/invariant.hpp"
#include "zonotube/log.hpp"
#include "zonotube/reachability.hpp"
#include "zonotube/scheduling.hpp"
#include "zonotube/simulation.hpp"
#include "zonotube/vehicle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace zonotube;

namespace {

struct Common {
  std::string gains = "data/reference_gains.json";
  std::string vehicle;
  int verbosity = 0;
};

VehicleParams vehicle_of(const Common& c) {
  return c.vehicle.empty() ? VehicleParams{} : load_vehicle_params(c.vehicle);
}

GainSchedule gains_of(const Common& c) {
  if (!fs::exists(c.gains)) throw std::runtime_error("gains file not found: " + c.gains);
  return load_gains(c.gains);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string fmt17(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string vec17(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt17(v(i));
  return out + "]";
}

// ---- simulate ---------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string controller;
  std::string anchor;
  std::string plant;
  std::optional<int> hp;
  std::optional<double> ts;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool deterministic = true;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  if (!a.deterministic)
    throw std::invalid_argument("--realtime: the worker-thread emulation mode is not implemented");
  const VehicleParams p = vehicle_of(c);
  const GainSchedule gains = gains_of(c);
  Scenario sc = a.scenario.empty() ? default_scenario(p) : load_scenario(a.scenario, p);
  if (a.duration) {
    sc.duration = *a.duration;
    if (a.scenario.empty()) {
      sc.reference = make_reference(default_reference_spec(), sc.duration, sc.sim.mpc.ts);
      sc.disturbances = default_disturbances(sc.duration);
    }
  }
  if (!a.controller.empty()) sc.controller = a.controller == "lqr" ? LocalController::Lqr : LocalController::HInf;
  if (!a.anchor.empty()) sc.sim.anchor = a.anchor == "nominal" ? AnchorMode::Nominal : AnchorMode::Measured;
  if (!a.plant.empty()) sc.sim.plant = a.plant == "linear" ? PlantKind::Linear : PlantKind::Nonlinear;
  if (a.hp) sc.sim.mpc.hp = *a.hp;
  if (a.ts) sc.sim.mpc.ts = *a.ts;
  if (a.seed) sc.seed = *a.seed;
  sc.validate();
  if (sc.controller == LocalController::Lqr && !gains.k_lqr)
    throw std::runtime_error("gains file has no LQR gains: " + c.gains);

  ensure_dir(a.out);
  const auto t0 = std::chrono::steady_clock::now();
  const RunLog log = run_scenario(sc, gains, p);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Metrics m = compute_metrics(log, sc);

  const fs::path dir(a.out);
  write_run_csv(log, (dir / "run.csv").string());
  write_ticks_csv(log, (dir / "ticks.csv").string());
  std::ofstream((dir / "metrics.json").string()) << metrics_json(m, sc.name, controller_name(sc.controller));

  std::cout << "scenario " << sc.name << " (" << controller_name(sc.controller) << ", "
            << (sc.sim.anchor == AnchorMode::Measured ? "re-anchored" : "classical") << ")\n"
            << "  rmse_vx " << fmt17(m.rmse_vx) << "  rmse_omega " << fmt17(m.rmse_omega) << '\n'
            << "  mean solve " << m.mean_solve_ms << " ms, max " << m.max_solve_ms << " ms, " << m.ticks
            << " ticks, " << m.degraded_ticks << " degraded\n"
            << "  wall time " << secs << " s, outputs in " << a.out << '\n';
  if (log.aborted) {
    std::cerr << "error: " << log.message << '\n';
    return 2;
  }
  return 0;
}

// ---- benchmark-tube ---------------------------------------------------------------

int cmd_benchmark(const Common& c, int reps, int poly_reps, int hp, const std::string& out) {
  const VehicleParams p = vehicle_of(c);
  const GainSchedule gains = gains_of(c);
  if (reps < 1) throw std::invalid_argument("--reps must be >= 1");
  if (hp < 1 || hp > 50) throw std::invalid_argument("--hp must lie in [1, 50]");
  // One exact vertex-hull pass takes on the order of a second.
  if (poly_reps <= 0) poly_reps = std::min(reps, 5);
  ensure_dir(out);
  const fs::path dir(out);
  const auto trans = benchmark_transitions(gains, p, hp);
  const Zonotope w = disturbance_set(default_disturbance_bounds());
  const TubeBenchmark b = benchmark_tube(trans, w, reps, poly_reps, (dir / "benchmark_steps.csv").string());

  std::ofstream csv((dir / "benchmark.csv").string());
  csv << std::setprecision(17) << "representation,repetitions,mean_us,median_us,p99_us,final_size\n"
      << "zonotope," << b.zonotope.repetitions << ',' << b.zonotope.mean_us << ',' << b.zonotope.median_us
      << ',' << b.zonotope.p99_us << ',' << b.final_generators << '\n'
      << "polytope," << b.polytope.repetitions << ',' << b.polytope.mean_us << ',' << b.polytope.median_us
      << ',' << b.polytope.p99_us << ',' << b.final_vertices << '\n'
      << "speedup,," << b.speedup << ",,,\n";

  std::cout << "tube propagation, H_p = " << hp << "\n"
            << "  zonotope: " << b.zonotope.repetitions << " reps, mean " << b.zonotope.mean_us
            << " us, median " << b.zonotope.median_us << " us, p99 " << b.zonotope.p99_us << " us, "
            << b.final_generators << " generators\n"
            << "  polytope: " << b.polytope.repetitions << " reps, mean " << b.polytope.mean_us
            << " us, median " << b.polytope.median_us << " us, p99 " << b.polytope.p99_us << " us, "
            << b.final_vertices << " vertices\n"
            << "  speedup " << b.speedup << "x, max axis support gap " << b.max_support_gap << '\n';
  return 0;
}

// ---- compute-sets ----------------------------------------------------------------

int cmd_compute_sets(const Common& c, const RpiOptions& opt, bool dry_run) {
  const VehicleParams p = vehicle_of(c);
  GainSchedule gains = gains_of(c);
  const Zonotope w = disturbance_set(default_disturbance_bounds());
  std::optional<ClosedLoopFamily> fam;
  try {
    fam.emplace(closed_loop_family(gains, p, w));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\nvertex spectral radii:\n";
    const auto rho = vertex_spectral_radii(gains, p);
    for (std::size_t i = 0; i < rho.size(); ++i) std::cerr << "  vertex " << i << ": " << fmt17(rho[i]) << '\n';
    return 1;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const TerminalSetReport rep = compute_terminal_set(*fam, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Zonotope& chi = rep.mrpi.set;
  const Vector radius = hull_radius(chi);
  const Box x = MpcConfig::default_state_box();
  bool inside = true;
  for (Eigen::Index i = 0; i < radius.size(); ++i) {
    const double half = 0.5 * (x.upper()(i) - x.lower()(i));
    if (std::isfinite(half) && radius(i) > half) inside = false;
  }
  const bool rpi = check_rpi(*fam, chi, rep.mrpi.epsilon_achieved);

  std::cout << "E0: p* = " << rep.e0.p_star << "\n"
            << "E_k*: " << rep.ek.iterations << " iterations\n"
            << "chi_f: " << rep.mrpi.iterations << " iterations, epsilon achieved "
            << fmt17(rep.mrpi.epsilon_achieved) << ", " << chi.num_generators() << " generators\n"
            << "chi_f inflation " << fmt17(rep.mrpi.inflation) << "\n"
            << "chi_f hull radius " << vec17(radius) << '\n'
            << "chi_f within X half-widths: " << (inside ? "true" : "false") << '\n'
            << "check_rpi: " << (rpi ? "pass" : "fail") << '\n'
            << "time " << secs << " s\n";
  if (!dry_run) {
    gains.terminal = TerminalSet{chi, rep.mrpi.epsilon_achieved, rep.mrpi.iterations};
    save_gains(gains, c.gains);
    std::cout << "wrote chi_f to " << c.gains << '\n';
  }
  return rpi ? 0 : 1;
}

// ---- validate-gains --------------------------------------------------------------

int cmd_validate(const Common& c) {
  std::vector<std::string> failures;
  GainSchedule gains;
  try {
    gains = gains_of(c);
  } catch (const std::exception& e) {
    std::cout << "schema/P check: FAIL (" << e.what() << ")\n";
    return 1;
  }
  const VehicleParams p = vehicle_of(c);
  std::cout << "schema: ok\n";

  const Eigen::SelfAdjointEigenSolver<Matrix5> es(gains.p);
  const double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  std::cout << "P: min eigenvalue " << fmt17(lmin) << ", condition number " << fmt17(lmax / lmin) << '\n';
  if (!(lmin > 0.0)) failures.push_back("P is not positive definite");

  const auto rho = vertex_spectral_radii(gains, p);
  std::cout << "vertex  v_x      v_y      delta    rho(Ts)\n";
  for (int i = 0; i < kNumVertices; ++i) {
    const Scheduling z = gains.bounds.vertex(i);
    std::printf("%6d  %7.3f  %7.3f  %7.3f  %.17g%s\n", i, z(0), z(1), z(2), rho[static_cast<size_t>(i)],
                rho[static_cast<size_t>(i)] < 1.0 ? "" : "  UNSTABLE");
    if (!(rho[static_cast<size_t>(i)] < 1.0)) failures.push_back("vertex " + std::to_string(i) + " is not contractive");
  }
  if (gains.terminal) {
    if (failures.empty()) {
      const ClosedLoopFamily fam = closed_loop_family(gains, p, disturbance_set(default_disturbance_bounds()));
      const bool ok = check_rpi(fam, gains.terminal->set, gains.terminal->epsilon_achieved);
      std::cout << "chi_f RPI check: " << (ok ? "pass" : "fail") << '\n';
      if (!ok) failures.push_back("chi_f is not robustly invariant");
    } else {
      std::cout << "chi_f RPI check: skipped\n";
    }
  } else {
    std::cout << "chi_f: not present\n";
  }
  if (failures.empty()) {
    std::cout << "all checks passed\n";
    return 0;
  }
  for (const auto& f : failures) std::cout << "FAIL: " << f << '\n';
  return 1;
}

// ---- metrics ----------------------------------------------------------------------

int cmd_metrics(const std::string& dir, const std::string& out, const std::string& name,
                const std::string& controller) {
  const fs::path d(dir);
  const RunLog log = read_run_log((d / "run.csv").string(), (d / "ticks.csv").string());
  Scenario sc;
  const Metrics m = compute_metrics(log, sc);
  const std::string text = metrics_json(m, name, controller);
  if (out.empty()) std::cout << text;
  else std::ofstream(out) << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zonotopic tube LPV-MPC: simulation, offline sets and benchmarks"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--gains", common.gains, "gain schedule file")->capture_default_str();
  app.add_option("--vehicle", common.vehicle, "vehicle parameter file (default: built-in)");
  app.add_flag("-v,--verbose", common.verbosity, "more log output (repeat for debug)");

  auto* sim = app.add_subcommand("simulate", "run a closed-loop scenario");
  SimulateArgs sa;
  sim->add_option("--scenario", sa.scenario, "scenario file (default: built-in default scenario)");
  sim->add_option("--out", sa.out, "output directory")->required();
  sim->add_option("--controller", sa.controller, "local controller")->check(CLI::IsMember({"hinf", "lqr"}));
  sim->add_option("--anchor", sa.anchor, "nominal state handling")->check(CLI::IsMember({"measured", "nominal"}));
  sim->add_option("--plant", sa.plant, "plant model")->check(CLI::IsMember({"nonlinear", "linear"}));
  sim->add_option("--hp", sa.hp, "prediction horizon")->check(CLI::Range(1, 50));
  sim->add_option("--ts", sa.ts, "MPC sampling time [s]")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed, "random seed");
  sim->add_option("--duration", sa.duration, "override the scenario duration [s]")->check(CLI::PositiveNumber);
  sim->add_flag("--deterministic,!--realtime", sa.deterministic, "solve the MPC inline; --realtime is rejected");

  auto* bench = app.add_subcommand("benchmark-tube", "time zonotope vs vertex-polytope tube propagation");
  int reps = 1000, poly_reps = 0, bench_hp = 5;
  std::string bench_out = "bench";
  bench->add_option("--reps", reps, "zonotope repetitions")->capture_default_str();
  bench->add_option("--poly-reps", poly_reps, "polytope repetitions (default: min(--reps, 5))");
  bench->add_option("--hp", bench_hp, "horizon")->capture_default_str()->check(CLI::Range(1, 50));
  bench->add_option("--out", bench_out, "output directory")->capture_default_str();

  auto* sets = app.add_subcommand("compute-sets", "compute E0, E_k* and chi_f and store chi_f");
  RpiOptions ropt;
  bool dry_run = false;
  sets->add_option("--xi", ropt.xi, "E0 contraction target")->capture_default_str();
  sets->add_option("--epsilon", ropt.epsilon, "mRPI outer-approximation tolerance")->capture_default_str();
  sets->add_flag("--dry-run", dry_run, "do not write chi_f back");

  app.add_subcommand("validate-gains", "check a gain schedule file");

  auto* met = app.add_subcommand("metrics", "recompute metrics from a simulate output directory");
  std::string met_dir, met_out, met_name = "from-log", met_ctrl = "unknown";
  met->add_option("--log", met_dir, "directory holding run.csv and ticks.csv")->required();
  met->add_option("--out", met_out, "metrics JSON path (default: stdout)");
  met->add_option("--name", met_name, "scenario name to record");
  met->add_option("--controller", met_ctrl, "controller name to record");

  CLI11_PARSE(app, argc, argv);
  if (common.verbosity >= 2) log().set_level(spdlog::level::debug);
  else if (common.verbosity == 1) log().set_level(spdlog::level::info);

  try {
    if (sim->parsed()) return cmd_simulate(common, sa);
    if (bench->parsed()) return cmd_benchmark(common, reps, poly_reps, bench_hp, bench_out);
    if (sets->parsed()) return cmd_compute_sets(common, ropt, dry_run);
    if (app.got_subcommand("validate-gains")) return cmd_validate(common);
    if (met->parsed()) return cmd_metrics(met_dir, met_out, met_name, met_ctrl);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
