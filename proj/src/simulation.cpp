#include "zonotube/simulation.hpp"

#include "zonotube/invariant.hpp"
#include "zonotube/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace zonotube {

using json = nlohmann::json;

namespace {

bool active(double t, double start, double end) { return t >= start && t < end; }

double smooth_step(double s) { return 0.5 - 0.5 * std::cos(std::numbers::pi * std::clamp(s, 0.0, 1.0)); }

}  // namespace

double SignalProfile::at(double t) const {
  double v = 0.0;
  for (const auto& s : steps)
    if (active(t, s.start, s.end)) v += s.value;
  for (const auto& s : sines)
    if (active(t, s.start, s.end))
      v += s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * (t - s.start) + s.phase);
  for (const auto& r : ramps)
    if (active(t, r.start, r.end)) v += r.from + (r.to - r.from) * (t - r.start) / (r.end - r.start);
  return v;
}

DisturbanceProfiles default_disturbances(double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("default_disturbances: duration must be positive");
  const double d = duration;
  DisturbanceProfiles out;
  // The sinusoid rides on an offset so the road never tilts downhill: the
  // tightened braking authority is too small to hold speed on a descent.
  out.slope.steps = {{0.10 * d, 0.25 * d, 0.08}, {0.35 * d, 0.55 * d, 0.07}, {0.70 * d, 0.80 * d, 0.05}};
  out.slope.sines = {{0.35 * d, 0.55 * d, 0.07, 0.25, 0.0}};
  out.wind.steps = {{0.15 * d, 0.30 * d, 18.0}, {0.45 * d, 0.55 * d, -20.0}};
  out.wind.ramps = {{0.80 * d, 0.95 * d, 0.0, 26.0}};
  return out;
}

State induced_disturbance(const Disturbance& d, const VehicleParams& p, double ts) {
  const double fw = 0.5 * p.rho * p.cda_l * d.wind * std::abs(d.wind);
  State w = State::Zero();
  w(kVx) = -p.g * std::sin(d.slope) * ts;
  w(kVy) = -fw / p.m * ts;
  w(kOmega) = -fw * (p.l_f - p.l_r) / p.inertia * ts;
  return w;
}

// ---- reference -----------------------------------------------------------------

namespace {

double sample_at(const std::vector<double>& v, double dt, double t) {
  if (v.empty()) throw std::logic_error("reference is empty");
  const double s = std::max(t, 0.0) / dt;
  const auto i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= v.size()) return v.back();
  const double f = s - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

}  // namespace

double Reference::vx_at(double t) const { return sample_at(vx, dt, t); }
double Reference::omega_at(double t) const { return sample_at(omega, dt, t); }

State Reference::state_at(double t) const {
  State r = State::Zero();
  r(kVx) = vx_at(t);
  r(kOmega) = omega_at(t);
  return r;
}

void Reference::validate(const Box& x_box) const {
  if (!(dt > 0.0)) throw std::invalid_argument("reference: dt must be positive");
  if (vx.empty() || vx.size() != omega.size())
    throw std::invalid_argument("reference: v_x and omega need the same nonzero length");
  for (std::size_t i = 0; i < vx.size(); ++i) {
    if (!(vx[i] >= x_box.lower()(kVx) && vx[i] <= x_box.upper()(kVx)) ||
        !(omega[i] >= x_box.lower()(kOmega) && omega[i] <= x_box.upper()(kOmega))) {
      std::ostringstream msg;
      msg << "reference sample " << i << " (v_x " << vx[i] << ", omega " << omega[i]
          << ") outside the state box";
      throw std::invalid_argument(msg.str());
    }
  }
}

ReferenceSpec default_reference_spec() {
  ReferenceSpec s;
  s.vx0 = 4.0;
  s.omega0 = 0.0;
  s.blend = 3.0;
  s.segments = {{5.0, 4.0, 0.0},  {10.0, 5.5, 0.0}, {10.0, 5.5, 0.4},
                {10.0, 5.0, -0.5}, {10.0, 4.5, 0.3}, {15.0, 6.0, 0.0}};
  return s;
}

Reference make_reference(const ReferenceSpec& spec, double duration, double dt, const Box& x_box) {
  if (!(duration > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("make_reference: duration and dt must be positive");
  if (spec.blend < 0.0) throw std::invalid_argument("make_reference: blend must be >= 0");
  for (const auto& s : spec.segments)
    if (!(s.duration > 0.0)) throw std::invalid_argument("make_reference: segment durations must be positive");

  Reference r;
  r.dt = dt;
  const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  r.vx.reserve(n);
  r.omega.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double vx = spec.vx0, om = spec.omega0, start = 0.0;
    for (const auto& s : spec.segments) {
      if (t < start) break;
      const double blend = std::min(spec.blend, s.duration);
      const double a = blend > 0.0 ? smooth_step((t - start) / blend) : 1.0;
      vx += a * (s.vx - vx);
      om += a * (s.omega - om);
      start += s.duration;
    }
    r.vx.push_back(vx);
    r.omega.push_back(om);
  }
  r.validate(x_box);
  return r;
}

void save_reference_csv(const Reference& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write reference file: " + path);
  out << std::setprecision(17) << "t,vx,omega\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    out << static_cast<double>(i) * r.dt << ',' << r.vx[i] << ',' << r.omega[i] << '\n';
}

Reference load_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference file: " + path);
  std::string line;
  std::getline(in, line);
  Reference r;
  std::vector<double> t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double a = 0, b = 0, c = 0;
    char s1 = 0, s2 = 0;
    if (!(ss >> a >> s1 >> b >> s2 >> c) || s1 != ',' || s2 != ',')
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    t.push_back(a);
    r.vx.push_back(b);
    r.omega.push_back(c);
  }
  if (t.size() < 2) throw std::runtime_error(path + ": need at least two samples");
  r.dt = t[1] - t[0];
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - r.dt) > 1e-9 * std::max(1.0, t[i]))
      throw std::runtime_error(path + ": samples must be uniformly spaced");
  return r;
}

// ---- configuration ---------------------------------------------------------------

void SimConfig::validate() const {
  if (!(local_dt > 0.0)) throw std::invalid_argument("sim: local_dt must be positive");
  if (!(mpc_period >= local_dt)) throw std::invalid_argument("sim: mpc_period must be >= local_dt");
  if (max_degraded < 0) throw std::invalid_argument("sim: max_degraded must be >= 0");
  if (w_bounds.size() != 0 && (w_bounds.size() != 5 || (w_bounds.array() < 0.0).any()))
    throw std::invalid_argument("sim: w_bounds needs 5 nonnegative entries");
  mpc.validate();
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("scenario: duration must be positive");
  sim.validate();
  reference.validate(sim.mpc.x_box);
  if (!x0.allFinite() || !u0.allFinite()) throw std::invalid_argument("scenario: non-finite initial condition");
  if (!sim.mpc.u_box.contains(u0, 1e-12)) throw std::invalid_argument("scenario: initial input outside U");
  if (disturbances.gust_std < 0.0 || !(disturbances.gust_period > 0.0))
    throw std::invalid_argument("scenario: gust_std must be >= 0 and gust_period > 0");
}

namespace {

Input trim_input(double vx, const VehicleParams& p) {
  return {0.0, p.mu * p.g + 0.5 * p.rho * p.cda_f * vx * vx / p.m};
}

SignalProfile parse_signal(const json& j) {
  SignalProfile s;
  for (const auto& e : j.value("steps", json::array()))
    s.steps.push_back({e.at("start").get<double>(), e.at("end").get<double>(), e.at("value").get<double>()});
  for (const auto& e : j.value("sines", json::array()))
    s.sines.push_back({e.at("start").get<double>(), e.at("end").get<double>(),
                       e.at("amplitude").get<double>(), e.at("frequency").get<double>(),
                       e.value("phase", 0.0)});
  for (const auto& e : j.value("ramps", json::array()))
    s.ramps.push_back({e.at("start").get<double>(), e.at("end").get<double>(), e.at("from").get<double>(),
                       e.at("to").get<double>()});
  return s;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw std::invalid_argument(std::string("scenario: ") + what + " needs " + std::to_string(N) + " entries");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

Scenario default_scenario(const VehicleParams& p) {
  Scenario sc;
  sc.reference = make_reference(default_reference_spec(), sc.duration, sc.sim.mpc.ts);
  sc.disturbances = default_disturbances(sc.duration);
  sc.x0(kVx) = sc.reference.vx.front();
  sc.u0 = trim_input(sc.x0(kVx), p);
  return sc;
}

Scenario parse_scenario(const std::string& text, const VehicleParams& p, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  try {
    Scenario sc;
    sc.name = j.value("name", std::string("scenario"));
    sc.duration = j.value("duration", 60.0);
    sc.seed = j.value("seed", std::uint64_t{1});
    const std::string ctrl = j.value("controller", std::string("hinf"));
    if (ctrl == "hinf") sc.controller = LocalController::HInf;
    else if (ctrl == "lqr") sc.controller = LocalController::Lqr;
    else throw std::invalid_argument("controller must be 'hinf' or 'lqr', got '" + ctrl + "'");

    if (j.contains("simulation")) {
      const json& s = j["simulation"];
      sc.sim.local_dt = s.value("local_dt", sc.sim.local_dt);
      sc.sim.mpc_period = s.value("mpc_period", sc.sim.mpc_period);
      sc.sim.max_degraded = s.value("max_degraded", sc.sim.max_degraded);
      sc.sim.mpc.hp = s.value("hp", sc.sim.mpc.hp);
      sc.sim.mpc.ts = s.value("ts", sc.sim.mpc.ts);
      sc.sim.mpc.prediction_substeps = s.value("prediction_substeps", sc.sim.mpc.prediction_substeps);
      const std::string plant = s.value("plant", std::string("nonlinear"));
      if (plant == "nonlinear") sc.sim.plant = PlantKind::Nonlinear;
      else if (plant == "linear") sc.sim.plant = PlantKind::Linear;
      else throw std::invalid_argument("plant must be 'nonlinear' or 'linear'");
      const std::string anchor = s.value("anchor", std::string("measured"));
      if (anchor == "measured") sc.sim.anchor = AnchorMode::Measured;
      else if (anchor == "nominal") sc.sim.anchor = AnchorMode::Nominal;
      else throw std::invalid_argument("anchor must be 'measured' or 'nominal'");
      if (s.contains("w_bounds")) sc.sim.w_bounds = vec_from<5>(s["w_bounds"], "w_bounds");
    }

    const json ref = j.value("reference", json("default"));
    if (ref.is_string() && ref.get<std::string>() == "default") {
      sc.reference = make_reference(default_reference_spec(), sc.duration, sc.sim.mpc.ts, sc.sim.mpc.x_box);
    } else if (ref.is_object() && ref.contains("file")) {
      std::filesystem::path f = ref["file"].get<std::string>();
      if (f.is_relative() && origin != "<memory>") f = std::filesystem::path(origin).parent_path() / f;
      sc.reference = load_reference_csv(f.string());
    } else if (ref.is_object()) {
      ReferenceSpec spec;
      spec.vx0 = ref.value("vx0", spec.vx0);
      spec.omega0 = ref.value("omega0", spec.omega0);
      spec.blend = ref.value("blend", spec.blend);
      for (const auto& s : ref.at("segments"))
        spec.segments.push_back({s.at("duration").get<double>(), s.at("vx").get<double>(), s.value("omega", 0.0)});
      sc.reference = make_reference(spec, sc.duration, sc.sim.mpc.ts, sc.sim.mpc.x_box);
    } else {
      throw std::invalid_argument("reference must be \"default\", {\"file\": ...} or a segment spec");
    }

    const json dist = j.value("disturbances", json("default"));
    if (dist.is_string() && dist.get<std::string>() == "default") {
      sc.disturbances = default_disturbances(sc.duration);
    } else if (dist.is_string() && dist.get<std::string>() == "none") {
      sc.disturbances = {};
    } else if (dist.is_object()) {
      if (dist.contains("slope")) sc.disturbances.slope = parse_signal(dist["slope"]);
      if (dist.contains("wind")) sc.disturbances.wind = parse_signal(dist["wind"]);
      sc.disturbances.gust_std = dist.value("gust_std", 0.0);
      sc.disturbances.gust_period = dist.value("gust_period", 0.5);
    } else {
      throw std::invalid_argument("disturbances must be \"default\", \"none\" or an object");
    }

    sc.x0 = State::Zero();
    sc.x0(kVx) = sc.reference.vx.front();
    sc.x0(kOmega) = sc.reference.omega.front();
    if (j.contains("initial_state")) sc.x0 = vec_from<5>(j["initial_state"], "initial_state");
    sc.u0 = trim_input(sc.x0(kVx), p);
    if (j.contains("initial_input")) sc.u0 = vec_from<2>(j["initial_input"], "initial_input");
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind(origin, 0) == 0) throw;
    throw std::invalid_argument(origin + ": " + what);
  }
}

Scenario load_scenario(const std::string& path, const VehicleParams& p) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), p, path);
}

// ---- closed loop ----------------------------------------------------------------

namespace {

State rk4_lpv(const State& x, const Input& u, const VehicleParams& p, double h) {
  const State k1 = lpv_derivatives(x, u, p);
  const State k2 = lpv_derivatives(x + 0.5 * h * k1, u, p);
  const State k3 = lpv_derivatives(x + 0.5 * h * k2, u, p);
  const State k4 = lpv_derivatives(x + h * k3, u, p);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State euler_step(const LpvMatrices& m, const State& x, const Input& u, double h) {
  return x + h * (m.a * x + m.b * u);
}

Input saturate(const Input& u, const Box& box) {
  return u.cwiseMax(box.lower()).cwiseMin(box.upper());
}

double table_violation(const MpcSolution& s, const Input& u_prev, const MpcConfig& cfg) {
  double v = 0.0;
  Input prev = u_prev;
  for (int i = 0; i < cfg.hp; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double du = s.u(i, j) - prev(j);
      v = std::max({v, std::abs(du) - cfg.du_max(j), cfg.u_box.lower()(j) - s.u(i, j),
                    s.u(i, j) - cfg.u_box.upper()(j)});
    }
    prev = s.u.row(i).transpose();
  }
  return v;
}

}  // namespace

RunLog run_scenario(const Scenario& sc, const GainSchedule& gains, const VehicleParams& p) {
  sc.validate();
  const SimConfig& cfg = sc.sim;
  const double h = cfg.local_dt;
  const Vector wb = cfg.w_bounds.size() == 5 ? cfg.w_bounds : default_disturbance_bounds();

  // The nominal MPC and its tube always use the robust design; the controller
  // choice only swaps the gains of the local loop.
  TubeMpc mpc(gains, p, disturbance_set(wb), cfg.mpc);
  const GainSchedule local = sc.controller == LocalController::Lqr ? gains.with_lqr_gains() : gains;

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gust(0.0, 1.0);
  double gust_value = 0.0;
  double next_gust = 0.0;

  const auto n_steps = static_cast<long>(std::floor(sc.duration / h + 1e-9));
  RunLog out;
  out.steps.reserve(static_cast<std::size_t>(n_steps));
  out.gains.reserve(static_cast<std::size_t>(n_steps));
  out.models.reserve(static_cast<std::size_t>(n_steps));

  State x = sc.x0;
  State x_nom = sc.x0;
  Input u_nom = sc.u0;
  LpvMatrices model;
  double next_tick = 0.0;
  int tick_index = 0;

  for (long k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * h;
    StepRecord rec;
    rec.t = t;

    if (t >= next_tick - 1e-9 * h) {
      ++tick_index;
      next_tick = static_cast<double>(tick_index) * cfg.mpc_period;
      const State x_mpc = cfg.anchor == AnchorMode::Measured ? x : x_nom;
      std::vector<State> r;
      for (int i = 0; i <= cfg.mpc.hp; ++i) r.push_back(sc.reference.state_at(t + i * cfg.mpc.ts));
      const Input u_prev = u_nom;
      const MpcSolution sol = mpc.step(x_mpc, u_prev, r);

      TickRecord tr;
      tr.t = t;
      tr.step = static_cast<int>(k);
      tr.x = x;
      tr.vx_ref = sc.reference.vx_at(t);
      tr.omega_ref = sc.reference.omega_at(t);
      tr.u_nom = sol.first_input();
      tr.du = sol.du.row(0).transpose();
      tr.status = sol.status;
      tr.qp_status = sol.qp_status;
      tr.degraded = sol.degraded;
      tr.terminal_verified = sol.terminal_verified;
      tr.iterations = sol.iterations;
      tr.primal_residual = sol.primal_residual;
      tr.dual_residual = sol.dual_residual;
      tr.solve_us = sol.solve_us;
      tr.cost = sol.cost;
      tr.tube_radius = sol.tube_radius;
      tr.violation = table_violation(sol, u_prev, cfg.mpc);
      out.ticks.push_back(tr);

      x_nom = x_mpc;
      u_nom = sol.first_input();
      model = sol.models.front();
      rec.tick = true;

      if (mpc.consecutive_degraded() > cfg.max_degraded) {
        out.aborted = true;
        std::ostringstream msg;
        msg << "MPC degraded for " << mpc.consecutive_degraded() << " consecutive ticks at t = " << t;
        out.message = msg.str();
        log().error("{}", out.message);
        break;
      }
    }

    if (sc.disturbances.gust_std > 0.0 && t >= next_gust) {
      gust_value = sc.disturbances.gust_std * gust(rng);
      next_gust += sc.disturbances.gust_period;
    }
    Disturbance d = sc.disturbances.at(t);
    d.wind += gust_value;

    const State e = x - x_nom;
    const Scheduling zeta = local.bounds.project(Scheduling(x(kVx), x(kVy), u_nom(kSteer)));
    const Matrix25 kk = gain_at(zeta, local);
    const Input u_inf = local_control(e, kk);
    const Input u_raw = u_nom + u_inf;
    const Input u = saturate(u_raw, cfg.mpc.u_box);

    State x_next;
    State w;
    if (cfg.plant == PlantKind::Linear) {
      const State dw = induced_disturbance(d, p, h);
      x_next = euler_step(model, x, u, h) + dw;
      w = dw * (cfg.mpc.ts / h);
    } else {
      x_next = plant_step_rk4(x, u, d, p, h);
      w = (x_next - rk4_lpv(x, u, p, h)) * (cfg.mpc.ts / h);
    }

    rec.x = x;
    rec.x_nom = x_nom;
    rec.e = e;
    rec.u_nom = u_nom;
    rec.u_inf = u_inf;
    rec.u = u;
    rec.d = d;
    rec.w = w;
    rec.saturated = (u - u_raw).cwiseAbs().maxCoeff() > 0.0;
    out.steps.push_back(rec);
    out.gains.push_back(kk);
    out.models.push_back(model);

    x = x_next;
    x_nom = euler_step(model, x_nom, u_nom, h);
  }
  return out;
}

// ---- metrics and export ----------------------------------------------------------

Metrics compute_metrics(const RunLog& log, const Scenario& sc, const Vector& w_bounds) {
  if (log.ticks.empty() || log.steps.empty()) throw std::invalid_argument("compute_metrics: empty log");
  const Vector wb = w_bounds.size() == 5 ? w_bounds
                    : sc.sim.w_bounds.size() == 5 ? sc.sim.w_bounds
                                                  : default_disturbance_bounds();
  Metrics m;
  double se_vx = 0.0, se_om = 0.0;
  double lo_vx = INFINITY, hi_vx = -INFINITY, lo_om = INFINITY, hi_om = -INFINITY;
  double total_us = 0.0;
  for (const auto& t : log.ticks) {
    se_vx += (t.x(kVx) - t.vx_ref) * (t.x(kVx) - t.vx_ref);
    se_om += (t.x(kOmega) - t.omega_ref) * (t.x(kOmega) - t.omega_ref);
    lo_vx = std::min(lo_vx, t.vx_ref);
    hi_vx = std::max(hi_vx, t.vx_ref);
    lo_om = std::min(lo_om, t.omega_ref);
    hi_om = std::max(hi_om, t.omega_ref);
    total_us += t.solve_us;
    m.max_solve_ms = std::max(m.max_solve_ms, t.solve_us / 1000.0);
    if (t.violation > 1e-6) ++m.constraint_violations;
    if (t.degraded) ++m.degraded_ticks;
    if (!t.terminal_verified) ++m.terminal_misses;
  }
  const auto n = static_cast<double>(log.ticks.size());
  m.samples = static_cast<int>(log.ticks.size());
  m.ticks = m.samples;
  m.rmse_vx = std::sqrt(se_vx / n);
  m.rmse_omega = std::sqrt(se_om / n);
  m.nrmse_vx = hi_vx > lo_vx ? m.rmse_vx / (hi_vx - lo_vx) : m.rmse_vx;
  m.nrmse_omega = hi_om > lo_om ? m.rmse_omega / (hi_om - lo_om) : m.rmse_omega;
  m.mean_solve_ms = total_us / n / 1000.0;

  // Only rows with a nonzero bound are checked: the kinematic rows carry the
  // RK4 versus Euler residual, which no finite W component covers.
  int inside = 0;
  for (const auto& s : log.steps) {
    m.max_abs_e = m.max_abs_e.cwiseMax(s.e.cwiseAbs());
    m.max_abs_w = m.max_abs_w.cwiseMax(s.w.cwiseAbs());
    bool ok = true;
    for (int a = 0; a < 5; ++a)
      if (wb(a) > 0.0 && std::abs(s.w(a)) > wb(a)) ok = false;
    inside += ok ? 1 : 0;
  }
  m.w_outside_samples = static_cast<int>(log.steps.size()) - inside;
  m.w_inside_fraction = static_cast<double>(inside) / static_cast<double>(log.steps.size());
  m.aborted = log.aborted;
  return m;
}

namespace {

const char* kAxes[5] = {"vx", "vy", "omega", "pos", "heading"};

}  // namespace

void write_run_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write run log: " + path);
  out << std::setprecision(17);
  out << "t";
  for (const char* prefix : {"x_", "xn_", "e_"})
    for (const char* a : kAxes) out << ',' << prefix << a;
  for (const char* prefix : {"un_", "uinf_", "u_"}) out << ',' << prefix << "steer," << prefix << "accel";
  out << ",slope,wind";
  for (const char* a : kAxes) out << ",w_" << a;
  out << ",tick,saturated\n";
  for (const auto& s : log.steps) {
    out << s.t;
    for (const State* v : {&s.x, &s.x_nom, &s.e})
      for (int a = 0; a < 5; ++a) out << ',' << (*v)(a);
    for (const Input* v : {&s.u_nom, &s.u_inf, &s.u}) out << ',' << (*v)(0) << ',' << (*v)(1);
    out << ',' << s.d.slope << ',' << s.d.wind;
    for (int a = 0; a < 5; ++a) out << ',' << s.w(a);
    out << ',' << (s.tick ? 1 : 0) << ',' << (s.saturated ? 1 : 0) << '\n';
  }
}

void write_ticks_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tick log: " + path);
  out << std::setprecision(17);
  out << "t,step,vx,omega,vx_ref,omega_ref,un_steer,un_accel,du_steer,du_accel,status,qp_status,"
         "degraded,terminal_verified,iterations,primal_residual,dual_residual,solve_us,cost,violation";
  for (const char* a : kAxes) out << ",tube_" << a;
  out << '\n';
  for (const auto& t : log.ticks) {
    out << t.t << ',' << t.step << ',' << t.x(kVx) << ',' << t.x(kOmega) << ',' << t.vx_ref << ','
        << t.omega_ref << ',' << t.u_nom(0) << ',' << t.u_nom(1) << ',' << t.du(0) << ',' << t.du(1)
        << ',' << to_string(t.status) << ',' << to_string(t.qp_status) << ',' << (t.degraded ? 1 : 0)
        << ',' << (t.terminal_verified ? 1 : 0) << ',' << t.iterations << ',' << t.primal_residual
        << ',' << t.dual_residual << ',' << t.solve_us << ',' << t.cost << ',' << t.violation;
    for (int a = 0; a < 5; ++a) out << ',' << (a < t.tube_radius.size() ? t.tube_radius(a) : 0.0);
    out << '\n';
  }
}

std::string controller_name(LocalController c) { return c == LocalController::HInf ? "hinf" : "lqr"; }

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns)
      throw std::runtime_error(path + ": expected " + std::to_string(columns) + " columns, got " +
                               std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }
  return rows;
}

MpcStatus mpc_status_from(const std::string& s) {
  for (MpcStatus v : {MpcStatus::Optimal, MpcStatus::MaxIterations, MpcStatus::Infeasible, MpcStatus::Fallback})
    if (to_string(v) == s) return v;
  throw std::runtime_error("unknown MPC status '" + s + "'");
}

QpStatus qp_status_from(const std::string& s) {
  for (QpStatus v : {QpStatus::Optimal, QpStatus::MaxIterations, QpStatus::PrimalInfeasible, QpStatus::DualInfeasible})
    if (to_string(v) == s) return v;
  throw std::runtime_error("unknown QP status '" + s + "'");
}

}  // namespace

RunLog read_run_log(const std::string& run_csv, const std::string& ticks_csv) {
  RunLog log;
  for (const auto& r : read_csv(run_csv, 31)) {
    std::size_t c = 0;
    auto next = [&] { return std::stod(r[c++]); };
    StepRecord s;
    s.t = next();
    for (State* v : {&s.x, &s.x_nom, &s.e})
      for (int a = 0; a < 5; ++a) (*v)(a) = next();
    for (Input* v : {&s.u_nom, &s.u_inf, &s.u})
      for (int a = 0; a < 2; ++a) (*v)(a) = next();
    s.d.slope = next();
    s.d.wind = next();
    for (int a = 0; a < 5; ++a) s.w(a) = next();
    s.tick = next() != 0.0;
    s.saturated = next() != 0.0;
    log.steps.push_back(s);
  }
  for (const auto& r : read_csv(ticks_csv, 25)) {
    TickRecord t;
    t.t = std::stod(r[0]);
    t.step = std::stoi(r[1]);
    t.x = State::Zero();
    t.x(kVx) = std::stod(r[2]);
    t.x(kOmega) = std::stod(r[3]);
    t.vx_ref = std::stod(r[4]);
    t.omega_ref = std::stod(r[5]);
    t.u_nom = Input(std::stod(r[6]), std::stod(r[7]));
    t.du = Input(std::stod(r[8]), std::stod(r[9]));
    t.status = mpc_status_from(r[10]);
    t.qp_status = qp_status_from(r[11]);
    t.degraded = r[12] == "1";
    t.terminal_verified = r[13] == "1";
    t.iterations = std::stoi(r[14]);
    t.primal_residual = std::stod(r[15]);
    t.dual_residual = std::stod(r[16]);
    t.solve_us = std::stod(r[17]);
    t.cost = std::stod(r[18]);
    t.violation = std::stod(r[19]);
    t.tube_radius = Vector(5);
    for (int a = 0; a < 5; ++a) t.tube_radius(a) = std::stod(r[20 + static_cast<std::size_t>(a)]);
    log.ticks.push_back(t);
  }
  return log;
}

std::string metrics_json(const Metrics& m, const std::string& name, const std::string& controller) {
  json j;
  j["scenario"] = name;
  j["controller"] = controller;
  j["rmse_vx"] = m.rmse_vx;
  j["rmse_omega"] = m.rmse_omega;
  j["nrmse_vx"] = m.nrmse_vx;
  j["nrmse_omega"] = m.nrmse_omega;
  j["max_abs_e"] = std::vector<double>(m.max_abs_e.data(), m.max_abs_e.data() + 5);
  j["max_abs_w"] = std::vector<double>(m.max_abs_w.data(), m.max_abs_w.data() + 5);
  j["w_inside_fraction"] = m.w_inside_fraction;
  j["w_outside_samples"] = m.w_outside_samples;
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["max_solve_ms"] = m.max_solve_ms;
  j["constraint_violations"] = m.constraint_violations;
  j["degraded_ticks"] = m.degraded_ticks;
  j["terminal_misses"] = m.terminal_misses;
  j["samples"] = m.samples;
  j["aborted"] = m.aborted;
  // nlohmann prints doubles with the shortest round-trip representation.
  return j.dump(2) + "\n";
}

}  // namespace zonotube
