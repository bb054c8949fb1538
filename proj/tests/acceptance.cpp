// Acceptance report: one PASS/FAIL line per criterion, INFO lines for context.
//
//   acceptance [--known-failure ID]...
//
// Exit status is 0 when the failing criteria are exactly the declared known
// failures, so a regression and an unexpected fix both show up in ctest.

#include "oracles.hpp"
#include "zonotube/invariant.hpp"
#include "zonotube/log.hpp"
#include "zonotube/reachability.hpp"
#include "zonotube/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <string>

using namespace zonotube;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::set<std::string> failed;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::printf("%s [%s] %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) failed.insert(id);
}

void info(const std::string& id, const std::string& detail) {
  std::printf("INFO [%s] %s\n", id.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(a)); }

GainSchedule gains() { return load_gains(std::string(ZONOTUBE_SOURCE_DIR) + "/data/reference_gains.json"); }

void tube_speedup(const GainSchedule& gs) {
  const auto t0 = Clock::now();
  const auto tr = benchmark_transitions(gs, VehicleParams{}, 5);
  const TubeBenchmark b = benchmark_tube(tr, disturbance_set(default_disturbance_bounds()), 1000, 5);
  const double mean_ms = b.zonotope.mean_us / 1000.0;
  const double t = seconds_since(t0);
  report("tube_speedup", mean_ms <= 0.1 && b.speedup >= 50.0 && t < 60.0,
         fmt("zonotope mean %.4f ms (<= 0.1), polytope mean %.1f ms, speedup %.0fx (>= 50), %.1f s", mean_ms,
             b.polytope.mean_us / 1000.0, b.speedup, t));
}

struct Run {
  Metrics m;
  double seconds = 0.0;
};

Run simulate(const GainSchedule& gs, LocalController c, AnchorMode anchor, PlantKind plant = PlantKind::Nonlinear,
             RunLog* keep = nullptr) {
  Scenario sc = default_scenario();
  sc.controller = c;
  sc.sim.anchor = anchor;
  sc.sim.plant = plant;
  const auto t0 = Clock::now();
  RunLog log = run_scenario(sc, gs);
  Run r{compute_metrics(log, sc), seconds_since(t0)};
  if (keep) *keep = std::move(log);
  return r;
}

void closed_loop(const GainSchedule& gs) {
  const Run hinf = simulate(gs, LocalController::HInf, AnchorMode::Measured);
  const Run lqr = simulate(gs, LocalController::Lqr, AnchorMode::Measured);
  const Run hinf_nom = simulate(gs, LocalController::HInf, AnchorMode::Nominal);
  const Run lqr_nom = simulate(gs, LocalController::Lqr, AnchorMode::Nominal);

  const double ratio = lqr.m.rmse_omega / hinf.m.rmse_omega;
  report("hinf_vs_lqr",
         ratio >= 5.0 && hinf.m.rmse_vx <= lqr.m.rmse_vx && hinf.seconds < 300.0 && lqr.seconds < 300.0,
         fmt("omega RMSE hinf %.3e vs lqr %.3e, ratio %.2f (>= 5); v_x RMSE hinf %.4f vs lqr %.4f; %.1f s + %.1f s",
             hinf.m.rmse_omega, lqr.m.rmse_omega, ratio, hinf.m.rmse_vx, lqr.m.rmse_vx, hinf.seconds, lqr.seconds));
  info("hinf_vs_lqr",
       fmt("classical tube (nominal state never re-anchored): omega RMSE hinf %.3e vs lqr %.3e, ratio %.1f; "
           "v_x RMSE hinf %.4f vs lqr %.4f",
           hinf_nom.m.rmse_omega, lqr_nom.m.rmse_omega, lqr_nom.m.rmse_omega / hinf_nom.m.rmse_omega,
           hinf_nom.m.rmse_vx, lqr_nom.m.rmse_vx));

  double worst_mean = 0.0, worst_max = 0.0;
  int violations = 0, degraded = 0, ticks = 0;
  bool aborted = false;
  for (const Run* r : {&hinf, &lqr, &hinf_nom, &lqr_nom}) {
    worst_mean = std::max(worst_mean, r->m.mean_solve_ms);
    worst_max = std::max(worst_max, r->m.max_solve_ms);
    violations += r->m.constraint_violations;
    degraded += r->m.degraded_ticks;
    ticks += r->m.ticks;
    aborted = aborted || r->m.aborted;
  }
  report("realtime", worst_mean <= 33.0,
         fmt("mean mpc_step %.3f ms (<= 33), worst single step %.3f ms, over 4 full runs", worst_mean, worst_max));

  // Tightened sets at H_p = 5 with the default W along the benchmark schedule.
  const auto tr = benchmark_transitions(gs, VehicleParams{}, 5);
  std::vector<Matrix25> k(5, gain_at(Scheduling(5.0, 0.0, 0.0), gs));
  const TubeSequence ts = tighten_constraints(propagate_tube(tr, disturbance_set(default_disturbance_bounds())),
                                              MpcConfig::default_state_box(), MpcConfig::default_input_box(), k);
  report("constraints", violations == 0 && degraded == 0 && !aborted && !ts.any_empty,
         fmt("%d violations of U and the rate box over %d ticks in 4 runs, %d degraded ticks, tightened sets %s",
             violations, ticks, degraded, ts.any_empty ? "EMPTY" : "non-empty"));

  // Error dynamics: exact recursion with the linear plant, W coverage with the nonlinear one.
  RunLog lin;
  const VehicleParams p;
  simulate(gs, LocalController::HInf, AnchorMode::Nominal, PlantKind::Linear, &lin);
  const double h = 0.005;
  double worst = 0.0;
  long checked = 0;
  for (std::size_t i = 0; i + 1 < lin.steps.size(); ++i) {
    if (lin.models[i + 1].a != lin.models[i].a) continue;
    const StepRecord& s = lin.steps[i];
    const LpvMatrices& m = lin.models[i];
    const State want = s.e + h * (m.a * s.e + m.b * (s.u - s.u_nom)) + induced_disturbance(s.d, p, h);
    worst = std::max(worst, (lin.steps[i + 1].e - want).cwiseAbs().maxCoeff());
    ++checked;
  }
  report("error_dynamics", worst <= 1e-12 && hinf.m.w_inside_fraction >= 0.99,
         fmt("linear plant recursion residual %.2e over %ld steps (<= 1e-12); nonlinear mismatch inside W "
             "%.2f%% of samples (>= 99%%)",
             worst, checked, 100.0 * hinf.m.w_inside_fraction));
}

void set_algebra() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> gens(1, 10);
  constexpr int kCases = 10000;
  int bad_comm = 0, bad_assoc = 0, bad_image = 0, bad_tight = 0, bad_sound = 0, bad_reduce = 0, bad_box = 0;

  for (int c = 0; c < kCases; ++c) {
    const auto z1 = oracle::random_zonotope(rng, 5, gens(rng));
    const auto z2 = oracle::random_zonotope(rng, 5, gens(rng));
    const auto z3 = oracle::random_zonotope(rng, 5, gens(rng));
    const Vector d = oracle::random_unit(rng, 5);
    if (!close(support(minkowski_sum(z1, z2), d), support(minkowski_sum(z2, z1), d), 1e-12)) ++bad_comm;
    if (!close(support(minkowski_sum(minkowski_sum(z1, z2), z3), d),
               support(minkowski_sum(z1, minkowski_sum(z2, z3)), d), 1e-12))
      ++bad_assoc;

    const Matrix m1 = oracle::random_matrix(rng, 5, 5), m2 = oracle::random_matrix(rng, 5, 5);
    if (!close(support(linear_image(m2, linear_image(m1, z1)), d), support(linear_image(m2 * m1, z1), d), 1e-12))
      ++bad_image;
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < kCases; ++c) {
    Vector lo(5), hi(5);
    for (int i = 0; i < 5; ++i) {
      lo(i) = -5.0 * u(rng);
      hi(i) = 5.0 * u(rng);
    }
    const Box x(lo, hi);
    const Zonotope z(Vector::Zero(5), oracle::random_matrix(rng, 5, gens(rng), 0.3));
    const Box e = box_erode_zonotope(x, z);
    for (int i = 0; i < 5; ++i) {
      const Vector ax = Vector::Unit(5, i);
      if (!close(e.upper()(i) + oracle::support_closed(z, ax), hi(i), 1e-12) ||
          !close(e.lower()(i) - oracle::support_closed(z, -ax), lo(i), 1e-12))
        ++bad_tight;
    }
    if (!e.is_empty()) {
      Vector p(5);
      for (int i = 0; i < 5; ++i) p(i) = e.lower()(i) + u(rng) * (e.upper()(i) - e.lower()(i));
      if (!x.contains(p + oracle::sample_point(rng, z), 1e-12)) ++bad_sound;
    }

    const Zonotope big = oracle::random_zonotope(rng, 5, 26 + gens(rng) * 3);
    const Zonotope r = reduce_generators(big, 25);
    for (int k = 0; k < 4; ++k) {
      const Vector d = oracle::random_unit(rng, 5);
      if (oracle::support_closed(r, d) < oracle::support_closed(big, d) - 1e-12) {
        ++bad_reduce;
        break;
      }
    }
    if (r.num_generators() > 25) ++bad_reduce;

    const Box back = interval_hull(Zonotope::from_box(x));
    if (back.lower() != x.lower() || back.upper() != x.upper()) ++bad_box;
  }
  const double t = seconds_since(t0);
  const int bad = bad_comm + bad_assoc + bad_image + bad_tight + bad_sound + bad_reduce + bad_box;
  report("set_algebra", bad == 0 && t < 60.0,
         fmt("%d cases each; failures: commutativity %d, associativity %d, image composition %d, erosion "
             "tightness %d, erosion soundness %d, reduction %d, box round trip %d; %.1f s",
             kCases, bad_comm, bad_assoc, bad_image, bad_tight, bad_sound, bad_reduce, bad_box, t));
}

void invariant_sets(const GainSchedule& gs) {
  const ClosedLoopFamily scalar({Matrix::Constant(1, 1, 0.5)}, Zonotope(Vector::Zero(1), Matrix::Constant(1, 1, 1.0)));
  const double eps = 1e-6;
  RpiOptions opt;
  opt.epsilon = eps;
  const TerminalSetReport s = compute_terminal_set(scalar, opt);
  const Box sh = interval_hull(s.mrpi.set);
  const bool scalar_ok = std::abs(sh.upper()(0) - 2.0) <= eps && std::abs(sh.lower()(0) + 2.0) <= eps;

  const VehicleParams p;
  const ClosedLoopFamily f = closed_loop_family(gs, p, disturbance_set(default_disturbance_bounds()));
  const TerminalSetReport design = compute_terminal_set(f);

  std::mt19937_64 rng(7);
  Matrix a = oracle::random_matrix(rng, 3, 3);
  a *= 0.7 / Eigen::EigenSolver<Matrix>(a).eigenvalues().cwiseAbs().maxCoeff();
  const ClosedLoopFamily g({a}, Zonotope(Vector::Zero(3), 0.1 * Matrix::Identity(3, 3)));
  const TerminalSetReport rnd = compute_terminal_set(g);

  int rpi_ok = 0;
  rpi_ok += check_rpi(scalar, s.mrpi.set, s.mrpi.epsilon_achieved);
  rpi_ok += check_rpi(f, design.mrpi.set, design.mrpi.epsilon_achieved);
  rpi_ok += check_rpi(g, rnd.mrpi.set, rnd.mrpi.epsilon_achieved);
  rpi_ok += gs.terminal && check_rpi(f, gs.terminal->set, gs.terminal->epsilon_achieved);

  // chi_f lives in deviation coordinates: it fits in X when its extent along
  // each bounded axis is within the half-width of X.
  const Box x = MpcConfig::default_state_box();
  const Vector r = hull_radius(design.mrpi.set);
  bool fits = true;
  std::string radii;
  for (int i = 0; i < 5; ++i) {
    const double half = 0.5 * (x.upper()(i) - x.lower()(i));
    if (std::isfinite(half)) {
      fits = fits && r(i) <= half;
      radii += fmt(" %.3f/%.1f", r(i), half);
    }
  }
  report("invariant_sets", scalar_ok && rpi_ok == 4 && fits,
         fmt("scalar chi_f [%.7f, %.7f] (target [-2, 2] to %.0e); check_rpi passed on %d/4 computed sets; "
             "chi_f radius/half-width on bounded axes:%s",
             sh.lower()(0), sh.upper()(0), eps, rpi_ok, radii.c_str()));
  info("invariant_sets", fmt("design chi_f: %d generators, inflation %.4f, epsilon achieved %.2e",
                             static_cast<int>(design.mrpi.set.num_generators()), design.mrpi.inflation,
                             design.mrpi.epsilon_achieved));
}

void lpv_exact() {
  const VehicleParams p;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> vx(2.0, 10.0), vy(-0.6, 0.6), dl(-0.267, 0.267), w(-1.4, 1.4),
      ac(-2.0, 13.0), pos(-100.0, 100.0), th(-3.14, 3.14);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    State s;
    s << vx(rng), vy(rng), w(rng), pos(rng), th(rng);
    const Input u(dl(rng), ac(rng));
    const State f = lpv_derivatives(s, u, p);
    const LpvMatrices m = lpv_at(s, u, p);
    worst = std::max(worst, (f - (m.a * s + m.b * u)).norm() / f.norm());
  }
  report("lpv_exact", worst < 1e-9, fmt("max relative residual %.2e over 10000 points (< 1e-9)", worst));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failure" && i + 1 < argc) {
      known.insert(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--known-failure ID]...\n");
      return 2;
    }
  }
  log().set_level(spdlog::level::err);

  try {
    const GainSchedule gs = gains();
    tube_speedup(gs);
    closed_loop(gs);
    set_algebra();
    invariant_sets(gs);
    lpv_exact();
  } catch (const std::exception& e) {
    std::printf("FAIL [harness] %s\n", e.what());
    return 1;
  }

  std::printf("%zu criteria failed", failed.size());
  for (const auto& f : failed) std::printf(" %s", f.c_str());
  std::printf("\n");
  if (failed != known) {
    std::printf("failing set differs from the declared known failures\n");
    return 1;
  }
  return 0;
}
