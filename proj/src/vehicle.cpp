#include "zonotube/vehicle.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace zonotube {

using json = nlohmann::json;

TirePoly TirePoly::front() {
  TirePoly t;
  t.p.resize(5);
  t.p << -2.167e6, 1.284e6, -0.288e6, 0.029e6, 15.038;
  return t;
}

TirePoly TirePoly::rear() {
  TirePoly t;
  t.p.resize(5);
  t.p << -2.130e6, 1.198e6, -0.252e6, 0.024e6, 14.551;
  return t;
}

VehicleParams VehicleParams::printed_table() {
  VehicleParams p;
  p.d_f = p.d_r = 8.255;
  p.b_f = p.b_r = 6.1;
  p.mu = 1.4;
  return p;
}

void VehicleParams::validate() const {
  for (double v : {l_f, l_r, m, inertia, d_f, c_f, b_f, d_r, c_r, b_r, mu, rho, g, cda_f, cda_l})
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("VehicleParams: parameters must be positive and finite");
  if (tire_front.p.size() < 2 || tire_rear.p.size() < 2)
    throw std::invalid_argument("VehicleParams: tire polynomial too short");
}

// C(a) = p1 a^(n-1) + ... + p_n + p_{n+1}/(a + eps), evaluated on |a| so that
// C(a) a is odd like the Pacejka curve.
double tire_stiffness(double alpha, const TirePoly& poly) {
  const double a = std::abs(alpha);
  if (a <= poly.saturation_band) return poly.saturation_value;
  const Eigen::Index n = poly.p.size() - 1;
  double c = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) c = c * a + poly.p(k);
  return c + poly.p(n) / (a + poly.epsilon);
}

double tire_force_lpv(double alpha, const TirePoly& poly) {
  return tire_stiffness(alpha, poly) * alpha;
}

double pacejka_force(double alpha, double d, double c, double b) {
  return d * std::sin(c * std::atan(b * alpha));
}

namespace {

void require_forward(const State& s) {
  if (!(s(kVx) > 0.0)) throw std::domain_error("vehicle model: v_x must be positive");
}

double yaw_sign(SlipConvention c) { return c == SlipConvention::Physical ? 1.0 : -1.0; }

}  // namespace

SlipAngles slip_angles_lpv(const State& s, const Input& u, const VehicleParams& p) {
  require_forward(s);
  const double sg = yaw_sign(p.slip);
  const double vx = s(kVx), vy = s(kVy), w = s(kOmega);
  return {u(kSteer) - vy / vx - sg * p.l_f * w / vx, -vy / vx + sg * p.l_r * w / vx};
}

SlipAngles slip_angles_plant(const State& s, const Input& u, const VehicleParams& p) {
  require_forward(s);
  const double sg = yaw_sign(p.slip);
  const double vx = s(kVx), vy = s(kVy), w = s(kOmega);
  return {u(kSteer) - std::atan(vy / vx + sg * p.l_f * w / vx),
          -std::atan(vy / vx - sg * p.l_r * w / vx)};
}

LpvMatrices lpv_matrices(const Scheduling& zeta, double cf, double cr, const VehicleParams& p) {
  const double vx = zeta(0), vy = zeta(1), delta = zeta(2);
  if (!(vx >= p.vx_min))
    throw std::domain_error("lpv_matrices: v_x = " + std::to_string(vx) + " below " +
                            std::to_string(p.vx_min));
  const double s = std::sin(delta), c = std::cos(delta);
  const double m = p.m, iz = p.inertia, lf = p.l_f, lr = p.l_r;

  LpvMatrices out;
  Matrix5& a = out.a;
  a(0, 0) = -p.mu * p.g / vx - p.rho * p.cda_f * vx / (2.0 * m);
  a(0, 1) = cf * s / (m * vx);
  a(0, 2) = cf * lf * s / (m * vx) + vy;
  a(1, 1) = -(cr + cf * c) / (m * vx);
  a(1, 2) = -(cf * lf * c - cr * lr) / (m * vx) - vx;
  a(2, 1) = -(cf * lf * c - lr * cr) / (iz * vx);
  a(2, 2) = -(cf * lf * lf * c + lr * lr * cr) / (iz * vx);
  const double k = p.kinematics == KinematicSign::Physical ? 1.0 : -1.0;
  a(3, 0) = k;
  a(4, 2) = k;

  Matrix52& b = out.b;
  b(0, 0) = -s * cf / m;
  b(0, 1) = 1.0;
  b(1, 0) = c * cf / m;
  b(2, 0) = c * cf * lf / iz;
  return out;
}

Scheduling scheduling_of(const State& s, const Input& u) {
  return Scheduling(s(kVx), s(kVy), u(kSteer));
}

LpvMatrices lpv_at(const State& s, const Input& u, const VehicleParams& p) {
  const SlipAngles sa = slip_angles_lpv(s, u, p);
  return lpv_matrices(scheduling_of(s, u), tire_stiffness(sa.front, p.tire_front),
                      tire_stiffness(sa.rear, p.tire_rear), p);
}

std::pair<Matrix5, Matrix52> discretize_euler(const LpvMatrices& m, double ts) {
  if (ts < 0.0) throw std::invalid_argument("discretize_euler: negative sample time");
  return {Matrix5::Identity() + m.a * ts, m.b * ts};
}

State lpv_derivatives(const State& s, const Input& u, const VehicleParams& p) {
  const SlipAngles sa = slip_angles_lpv(s, u, p);
  const double fyf = tire_force_lpv(sa.front, p.tire_front);
  const double fyr = tire_force_lpv(sa.rear, p.tire_rear);
  const double vx = s(kVx), vy = s(kVy), w = s(kOmega), delta = u(kSteer);
  const double fdf = p.mu * p.m * p.g + 0.5 * p.rho * p.cda_f * vx * vx;
  const double k = p.kinematics == KinematicSign::Physical ? 1.0 : -1.0;

  State f;
  f(kVx) = u(kAccel) + (-fyf * std::sin(delta) - fdf) / p.m + w * vy;
  f(kVy) = (fyf * std::cos(delta) + fyr) / p.m - w * vx;
  f(kOmega) = (fyf * p.l_f * std::cos(delta) - fyr * p.l_r) / p.inertia;
  f(kPos) = k * vx;
  f(kHeading) = k * w;
  return f;
}

State plant_derivatives(const State& s, const Input& u, const Disturbance& d,
                        const VehicleParams& p) {
  const SlipAngles sa = slip_angles_plant(s, u, p);
  const double fyf = pacejka_force(sa.front, p.d_f, p.c_f, p.b_f);
  const double fyr = pacejka_force(sa.rear, p.d_r, p.c_r, p.b_r);
  const double vx = s(kVx), vy = s(kVy), w = s(kOmega), delta = u(kSteer);
  const double fdf = p.mu * p.m * p.g + 0.5 * p.rho * p.cda_f * vx * vx;
  const double fw = 0.5 * p.rho * p.cda_l * d.wind * std::abs(d.wind);

  State f;
  f(kVx) = u(kAccel) + (-fyf * std::sin(delta) - fdf) / p.m + w * vy - p.g * std::sin(d.slope);
  f(kVy) = (fyf * std::cos(delta) + fyr - fw) / p.m - w * vx;
  f(kOmega) = (fyf * p.l_f * std::cos(delta) - fyr * p.l_r - fw * (p.l_f - p.l_r)) / p.inertia;
  f(kPos) = vx;
  f(kHeading) = w;
  return f;
}

State plant_step_rk4(const State& s, const Input& u, const Disturbance& d,
                     const VehicleParams& p, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("plant_step_rk4: step must be positive");
  auto valid = [](const State& x) {
    if (!(x(kVx) > 0.1) || !x.allFinite())
      throw std::runtime_error("plant left its validity region (v_x <= 0.1 m/s)");
  };
  valid(s);
  const State k1 = plant_derivatives(s, u, d, p);
  const State x2 = s + 0.5 * h * k1;
  valid(x2);
  const State k2 = plant_derivatives(x2, u, d, p);
  const State x3 = s + 0.5 * h * k2;
  valid(x3);
  const State k3 = plant_derivatives(x3, u, d, p);
  const State x4 = s + h * k3;
  valid(x4);
  const State k4 = plant_derivatives(x4, u, d, p);
  State out = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  valid(out);
  return out;
}

TirePoly fit_tire_poly(const std::vector<std::pair<double, double>>& samples, int order) {
  if (order < 1) throw std::invalid_argument("fit_tire_poly: order must be >= 1");
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < order + 2) throw std::invalid_argument("fit_tire_poly: need at least order + 2 samples");
  Eigen::MatrixXd v(n, order + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = samples[static_cast<size_t>(i)].first;
    double pw = 1.0;
    for (int k = order; k >= 0; --k) {
      v(i, k) = pw;
      pw *= a;
    }
    y(i) = samples[static_cast<size_t>(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
  if (qr.rank() < order + 1) throw std::invalid_argument("fit_tire_poly: rank-deficient design");
  TirePoly t;
  t.p = qr.solve(y);
  return t;
}

namespace {

json tire_to_json(const TirePoly& t) {
  return {{"p", std::vector<double>(t.p.data(), t.p.data() + t.p.size())},
          {"epsilon", t.epsilon},
          {"saturation_band", t.saturation_band},
          {"saturation_value", t.saturation_value}};
}

TirePoly tire_from_json(const json& j, TirePoly t) {
  if (j.contains("p")) {
    auto v = j.at("p").get<std::vector<double>>();
    t.p = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  t.epsilon = j.value("epsilon", t.epsilon);
  t.saturation_band = j.value("saturation_band", t.saturation_band);
  t.saturation_value = j.value("saturation_value", t.saturation_value);
  return t;
}

}  // namespace

VehicleParams load_vehicle_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vehicle config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("vehicle config " + path + ": " + e.what());
  }
  VehicleParams p;
  const json body = j.value("body", json::object());
  p.l_f = body.value("l_f", p.l_f);
  p.l_r = body.value("l_r", p.l_r);
  p.m = body.value("m", p.m);
  p.inertia = body.value("I", p.inertia);
  p.mu = body.value("mu", p.mu);
  p.rho = body.value("rho", p.rho);
  p.g = body.value("g", p.g);
  p.cda_f = body.value("C_dAf", p.cda_f);
  p.cda_l = body.value("C_dAl", p.cda_l);
  const json pac = j.value("pacejka", json::object());
  p.d_f = pac.value("d_f", p.d_f);
  p.c_f = pac.value("c_f", p.c_f);
  p.b_f = pac.value("b_f", p.b_f);
  p.d_r = pac.value("d_r", p.d_r);
  p.c_r = pac.value("c_r", p.c_r);
  p.b_r = pac.value("b_r", p.b_r);
  if (j.contains("tire_front")) p.tire_front = tire_from_json(j["tire_front"], p.tire_front);
  if (j.contains("tire_rear")) p.tire_rear = tire_from_json(j["tire_rear"], p.tire_rear);
  const std::string slip = j.value("slip_convention", std::string("physical"));
  const std::string kin = j.value("kinematic_sign", std::string("physical"));
  if (slip != "physical" && slip != "printed")
    throw std::runtime_error("vehicle config: slip_convention must be physical|printed");
  if (kin != "physical" && kin != "printed")
    throw std::runtime_error("vehicle config: kinematic_sign must be physical|printed");
  p.slip = slip == "physical" ? SlipConvention::Physical : SlipConvention::Printed;
  p.kinematics = kin == "physical" ? KinematicSign::Physical : KinematicSign::Printed;
  p.vx_min = j.value("vx_min", p.vx_min);
  p.validate();
  return p;
}

void save_vehicle_params(const VehicleParams& p, const std::string& path) {
  json j;
  j["body"] = {{"l_f", p.l_f}, {"l_r", p.l_r}, {"m", p.m},        {"I", p.inertia},
               {"mu", p.mu},   {"rho", p.rho}, {"g", p.g},        {"C_dAf", p.cda_f},
               {"C_dAl", p.cda_l}};
  j["pacejka"] = {{"d_f", p.d_f}, {"c_f", p.c_f}, {"b_f", p.b_f},
                  {"d_r", p.d_r}, {"c_r", p.c_r}, {"b_r", p.b_r}};
  j["tire_front"] = tire_to_json(p.tire_front);
  j["tire_rear"] = tire_to_json(p.tire_rear);
  j["slip_convention"] = p.slip == SlipConvention::Physical ? "physical" : "printed";
  j["kinematic_sign"] = p.kinematics == KinematicSign::Physical ? "physical" : "printed";
  j["vx_min"] = p.vx_min;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vehicle config: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace zonotube
