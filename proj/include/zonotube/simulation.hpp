#pragma once

#include "zonotube/mpc.hpp"
#include "zonotube/scheduling.hpp"
#include "zonotube/vehicle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace zonotube {

/// Sum of windowed steps, sinusoids and ramps. Windows are half open,
/// [start, end).
struct SignalProfile {
  struct Step {
    double start, end, value;
  };
  struct Sine {
    double start, end, amplitude, frequency, phase = 0.0;
  };
  struct Ramp {
    double start, end, from, to;
  };
  std::vector<Step> steps;
  std::vector<Sine> sines;
  std::vector<Ramp> ramps;

  double at(double t) const;
  bool empty() const { return steps.empty() && sines.empty() && ramps.empty(); }
};

struct DisturbanceProfiles {
  SignalProfile slope;  // rad
  SignalProfile wind;   // m/s
  /// Standard deviation of piecewise-constant random wind gusts (0 = off).
  double gust_std = 0.0;
  double gust_period = 0.5;

  Disturbance at(double t) const { return {slope.at(t), wind.at(t)}; }
};

/// Slope: two steps and a sinusoid segment. Wind: two steps and a ramp.
/// Amplitudes keep the induced disturbance within about 70% of b_w.
DisturbanceProfiles default_disturbances(double duration);

/// Disturbance terms one MPC period of the given disturbance injects into the
/// velocity rows (slope on v_x, wind force on v_y and omega).
State induced_disturbance(const Disturbance& d, const VehicleParams& p, double ts);

struct ReferenceSegment {
  double duration = 0.0;
  double vx = 0.0;
  double omega = 0.0;
};

/// Piecewise-constant targets joined by raised-cosine transitions of length
/// `blend` at the start of each segment.
struct ReferenceSpec {
  double vx0 = 4.0;
  double omega0 = 0.0;
  double blend = 3.0;
  std::vector<ReferenceSegment> segments;
};

/// Reference sampled on a uniform grid; held after the last sample.
struct Reference {
  double dt = 0.033;
  std::vector<double> vx;
  std::vector<double> omega;

  double vx_at(double t) const;
  double omega_at(double t) const;
  State state_at(double t) const;
  std::size_t size() const { return vx.size(); }
  void validate(const Box& x_box) const;
};

ReferenceSpec default_reference_spec();
Reference make_reference(const ReferenceSpec& spec, double duration, double dt,
                         const Box& x_box = MpcConfig::default_state_box());
void save_reference_csv(const Reference& r, const std::string& path);
Reference load_reference_csv(const std::string& path);

enum class PlantKind { Nonlinear, Linear };
/// Measured: x_nominal is reset to the measured state at every MPC tick.
/// Nominal: classical tube MPC, x_nominal is never re-anchored.
enum class AnchorMode { Measured, Nominal };

struct SimConfig {
  double local_dt = 0.005;
  /// Time between MPC ticks. 7 * local_dt gives a tick every 7 steps;
  /// 1/30 alternates 6 and 7 steps.
  double mpc_period = 0.035;
  PlantKind plant = PlantKind::Nonlinear;
  AnchorMode anchor = AnchorMode::Measured;
  int max_degraded = 10;
  MpcConfig mpc;
  Vector w_bounds = Vector::Zero(0);  // empty: default b_w

  void validate() const;
};

struct Scenario {
  std::string name = "default";
  double duration = 60.0;
  Reference reference;
  DisturbanceProfiles disturbances;
  LocalController controller = LocalController::HInf;
  std::uint64_t seed = 1;
  State x0 = State::Zero();
  Input u0 = Input::Zero();
  SimConfig sim;

  void validate() const;
};

/// Default 60 s scenario; initial state on the reference at its trim input.
Scenario default_scenario(const VehicleParams& p = {});
Scenario parse_scenario(const std::string& text, const VehicleParams& p = {},
                        const std::string& origin = "<memory>");
Scenario load_scenario(const std::string& path, const VehicleParams& p = {});

struct StepRecord {
  double t = 0.0;
  State x, x_nom, e;
  Input u_nom, u_inf, u;
  Disturbance d;
  State w;  // realized mismatch scaled to one MPC period
  bool tick = false;
  bool saturated = false;
};

struct TickRecord {
  double t = 0.0;
  int step = 0;
  State x;
  double vx_ref = 0.0, omega_ref = 0.0;
  Input u_nom, du;
  MpcStatus status = MpcStatus::Optimal;
  QpStatus qp_status = QpStatus::Optimal;
  bool degraded = false;
  bool terminal_verified = true;
  int iterations = 0;
  double primal_residual = 0.0, dual_residual = 0.0;
  double solve_us = 0.0;
  double cost = 0.0;
  Vector tube_radius;
  double violation = 0.0;  // largest excess of the plan over U and the rate box
};

struct RunLog {
  std::vector<StepRecord> steps;
  std::vector<TickRecord> ticks;
  /// Local gain and the frozen model used at each step (not exported).
  std::vector<Matrix25> gains;
  std::vector<LpvMatrices> models;
  bool aborted = false;
  std::string message;
};

RunLog run_scenario(const Scenario& sc, const GainSchedule& gains, const VehicleParams& p = {});

struct Metrics {
  double rmse_vx = 0.0, rmse_omega = 0.0;
  double nrmse_vx = 0.0, nrmse_omega = 0.0;
  State max_abs_e = State::Zero();
  State max_abs_w = State::Zero();
  double w_inside_fraction = 1.0;
  int w_outside_samples = 0;
  double mean_solve_ms = 0.0, max_solve_ms = 0.0;
  int constraint_violations = 0;
  int degraded_ticks = 0;
  int terminal_misses = 0;
  int samples = 0;  // MPC-rate samples used for the RMSE
  int ticks = 0;
  bool aborted = false;
};

/// RMSE over the MPC ticks. NRMSE divides by the reference range and equals
/// the RMSE when the range is zero.
Metrics compute_metrics(const RunLog& log, const Scenario& sc, const Vector& w_bounds = {});

/// One row per local step; columns listed in the README.
void write_run_csv(const RunLog& log, const std::string& path);
/// One row per MPC tick with solver statistics and tube radii.
void write_ticks_csv(const RunLog& log, const std::string& path);
/// Reads both CSVs back (gains and models are not stored and stay empty).
RunLog read_run_log(const std::string& run_csv, const std::string& ticks_csv);

std::string metrics_json(const Metrics& m, const std::string& name, const std::string& controller);
std::string controller_name(LocalController c);

}  // namespace zonotube
