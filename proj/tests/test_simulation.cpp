#include "zonotube/invariant.hpp"
#include "zonotube/simulation.hpp"

#include <doctest.h>

#include <filesystem>
#include <numbers>

using namespace zonotube;
namespace fs = std::filesystem;

namespace {

GainSchedule reference_gains() {
  return load_gains(std::string(ZONOTUBE_SOURCE_DIR) + "/data/reference_gains.json");
}

Scenario short_scenario(double duration, PlantKind plant, AnchorMode anchor) {
  Scenario sc = default_scenario();
  sc.duration = duration;
  sc.sim.plant = plant;
  sc.sim.anchor = anchor;
  return sc;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("zonotube_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Log with ticks only, reference and state chosen by the caller.
RunLog synthetic_log(const std::vector<double>& ref, const std::vector<double>& got) {
  RunLog log;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    TickRecord t;
    t.vx_ref = ref[i];
    t.omega_ref = 0.0;
    t.x = State::Zero();
    t.x(kVx) = got[i];
    log.ticks.push_back(t);
    StepRecord s;
    s.x = s.x_nom = s.e = s.w = State::Zero();
    log.steps.push_back(s);
  }
  return log;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("linear plant error recursion") {
  const VehicleParams p;
  Scenario sc = short_scenario(4.0, PlantKind::Linear, AnchorMode::Nominal);
  const RunLog log = run_scenario(sc, reference_gains(), p);
  REQUIRE_FALSE(log.aborted);
  const double h = sc.sim.local_dt;
  int checked = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < log.steps.size(); ++k) {
    const StepRecord& s = log.steps[k];
    const LpvMatrices& m = log.models[k];
    // e+ = (I + hA) e + hB (u - u_nom) + w_h, valid while the model is held.
    if (log.models[k + 1].a != m.a) continue;
    const State want = s.e + h * (m.a * s.e + m.b * (s.u - s.u_nom)) + induced_disturbance(s.d, p, h);
    worst = std::max(worst, (log.steps[k + 1].e - want).cwiseAbs().maxCoeff());
    ++checked;
  }
  CHECK(checked > 100);
  CHECK(worst < 1e-12);
}

TEST_CASE("matched model without disturbance keeps the error at zero") {
  Scenario sc = short_scenario(3.0, PlantKind::Linear, AnchorMode::Nominal);
  sc.disturbances = DisturbanceProfiles{};
  const RunLog log = run_scenario(sc, reference_gains());
  REQUIRE_FALSE(log.aborted);
  double worst = 0.0;
  for (const auto& s : log.steps) worst = std::max(worst, s.e.norm());
  CHECK(worst < 1e-6);
}

TEST_CASE("wind step stays inside the disturbance set") {
  const GainSchedule gs = reference_gains();
  Scenario sc = short_scenario(6.0, PlantKind::Linear, AnchorMode::Nominal);
  sc.disturbances = DisturbanceProfiles{};
  sc.disturbances.wind.steps = {{1.0, 4.0, 18.0}};
  const RunLog log = run_scenario(sc, gs);
  REQUIRE_FALSE(log.aborted);
  const Metrics m = compute_metrics(log, sc);
  CHECK(m.w_inside_fraction == 1.0);
  CHECK(m.max_abs_e(kVy) > 0.0);

  // At the ticks the error of the classical tube stays in chi_f.
  REQUIRE(gs.terminal.has_value());
  const Box hull = interval_hull(gs.terminal->set);
  for (const auto& s : log.steps)
    if (s.tick) CHECK(hull.contains(s.e, 1e-9));
}

TEST_CASE("default disturbance profiles") {
  const VehicleParams p;
  const DisturbanceProfiles d = default_disturbances(60.0);
  for (double t : {0.0, 5.0, 5.99, 59.99}) {
    CHECK(d.at(t).slope == 0.0);
    CHECK(d.at(t).wind == 0.0);
  }
  CHECK(d.at(6.0).slope != 0.0);

  const Vector b = default_disturbance_bounds();
  State worst = State::Zero();
  for (int i = 0; i <= 60000; ++i) {
    const State w = induced_disturbance(d.at(i * 1e-3), p, 0.033);
    worst = worst.cwiseMax(w.cwiseAbs());
    CHECK(d.at(i * 1e-3).slope >= 0.0);
  }
  for (int a = 0; a < 3; ++a) {
    CHECK(worst(a) <= b(a));
    CHECK(worst(a) >= 0.5 * b(a));
  }

  // A lone sinusoid crosses zero every half period.
  SignalProfile s;
  s.sines = {{1.0, 9.0, 2.0, 0.25, 0.0}};
  CHECK(s.at(1.0) == doctest::Approx(0.0));
  CHECK(s.at(2.0) == doctest::Approx(2.0));
  CHECK(s.at(3.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.at(4.0) == doctest::Approx(-2.0));
  CHECK(s.at(9.0) == 0.0);

  SignalProfile r;
  r.ramps = {{0.0, 2.0, 1.0, 3.0}};
  CHECK(r.at(1.0) == doctest::Approx(2.0));
  CHECK(r.at(2.0) == 0.0);
}

TEST_CASE("metric oracles") {
  const Scenario sc = default_scenario();
  const std::vector<double> ref{4.0, 4.5, 5.0, 5.5};
  CHECK(compute_metrics(synthetic_log(ref, ref), sc).rmse_vx == 0.0);

  std::vector<double> off = ref;
  for (double& v : off) v += 0.1;
  const Metrics m = compute_metrics(synthetic_log(ref, off), sc);
  CHECK(m.rmse_vx == doctest::Approx(0.1));
  CHECK(m.nrmse_vx == doctest::Approx(0.1 / 1.5));

  // Sinusoidal error over whole periods.
  std::vector<double> flat(400, 5.0), wavy(400);
  for (std::size_t i = 0; i < wavy.size(); ++i)
    wavy[i] = 5.0 + 0.3 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 40.0);
  const Metrics s = compute_metrics(synthetic_log(flat, wavy), sc);
  CHECK(s.rmse_vx == doctest::Approx(0.3 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.nrmse_vx == s.rmse_vx);

  CHECK_THROWS_AS(compute_metrics(RunLog{}, sc), std::invalid_argument);
}

TEST_CASE("reference generation") {
  ReferenceSpec flat;
  flat.vx0 = 5.0;
  const Reference r = make_reference(flat, 10.0, 0.033);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.vx[i] == 5.0);
    CHECK(r.omega[i] == 0.0);
  }
  CHECK(r.vx_at(1e6) == 5.0);

  const Reference def = make_reference(default_reference_spec(), 60.0, 0.033);
  CHECK(def.vx_at(0.0) == 4.0);
  CHECK(def.vx_at(12.0) == doctest::Approx(5.5));
  CHECK(def.omega_at(22.0) == doctest::Approx(0.4));

  const fs::path dir = scratch_dir("reference");
  save_reference_csv(def, (dir / "ref.csv").string());
  const Reference back = load_reference_csv((dir / "ref.csv").string());
  CHECK(back.dt == doctest::Approx(def.dt));
  CHECK(back.vx == def.vx);
  CHECK(back.omega == def.omega);

  ReferenceSpec fast;
  fast.segments = {{5.0, 20.0, 0.0}};
  CHECK_THROWS_WITH_AS(make_reference(fast, 10.0, 0.033), doctest::Contains("outside the state box"),
                       std::invalid_argument);
}

TEST_CASE("runs are deterministic") {
  Scenario sc = short_scenario(3.0, PlantKind::Nonlinear, AnchorMode::Measured);
  sc.disturbances.gust_std = 1.0;
  const GainSchedule gs = reference_gains();
  const RunLog a = run_scenario(sc, gs), b = run_scenario(sc, gs);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].x == b.steps[i].x);
    CHECK(a.steps[i].u == b.steps[i].u);
  }
  sc.seed = 2;
  const RunLog c = run_scenario(sc, gs);
  CHECK(c.steps.back().x != a.steps.back().x);
}

TEST_CASE("scenario file matches the built-in default") {
  const Scenario file = load_scenario(std::string(ZONOTUBE_SOURCE_DIR) + "/data/default_scenario.json");
  const Scenario def = default_scenario();
  CHECK(file.duration == def.duration);
  CHECK(file.reference.vx == def.reference.vx);
  CHECK(file.reference.omega == def.reference.omega);
  CHECK(file.x0 == def.x0);
  CHECK(file.u0 == def.u0);
  for (int i = 0; i < 6000; ++i) {
    const double t = i * 0.01;
    CHECK(file.disturbances.at(t).slope == doctest::Approx(def.disturbances.at(t).slope).epsilon(1e-12));
    CHECK(file.disturbances.at(t).wind == doctest::Approx(def.disturbances.at(t).wind).epsilon(1e-12));
  }

  CHECK_THROWS_WITH_AS(load_scenario("/no/such/scenario.json"), doctest::Contains("/no/such/scenario.json"),
                       std::runtime_error);
}

TEST_CASE("csv logs read back") {
  const Scenario sc = short_scenario(2.0, PlantKind::Nonlinear, AnchorMode::Measured);
  const RunLog log = run_scenario(sc, reference_gains());
  const fs::path dir = scratch_dir("csv");
  write_run_csv(log, (dir / "run.csv").string());
  write_ticks_csv(log, (dir / "ticks.csv").string());
  const RunLog back = read_run_log((dir / "run.csv").string(), (dir / "ticks.csv").string());
  REQUIRE(back.steps.size() == log.steps.size());
  REQUIRE(back.ticks.size() == log.ticks.size());
  const Metrics a = compute_metrics(log, sc), b = compute_metrics(back, sc);
  CHECK(a.rmse_vx == b.rmse_vx);
  CHECK(a.rmse_omega == b.rmse_omega);
  CHECK(a.max_abs_e == b.max_abs_e);
  CHECK(a.w_inside_fraction == b.w_inside_fraction);
  CHECK(metrics_json(a, "x", "hinf") == metrics_json(b, "x", "hinf"));
}

}  // TEST_SUITE
