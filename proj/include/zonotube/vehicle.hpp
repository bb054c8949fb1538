#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace zonotube {

// State (v_x, v_y, omega, x, theta), input (delta, a), scheduling (v_x, v_y, delta).
using State = Eigen::Matrix<double, 5, 1>;
using Input = Eigen::Vector2d;
using Scheduling = Eigen::Vector3d;
using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Matrix52 = Eigen::Matrix<double, 5, 2>;
using Matrix25 = Eigen::Matrix<double, 2, 5>;

enum StateIndex : int { kVx = 0, kVy = 1, kOmega = 2, kPos = 3, kHeading = 4 };
enum InputIndex : int { kSteer = 0, kAccel = 1 };

/// Sign carried by the l*omega slip terms.
///  Physical: alpha_f = delta - (v_y + l_f w)/v_x, alpha_r = -(v_y - l_r w)/v_x,
///            which is the convention the LPV matrices are built from.
///  Printed:  the opposite l*omega sign, as typeset in the model equations.
enum class SlipConvention { Physical, Printed };

/// Sign of the x and theta rows of A (+1 integrates v_x and omega).
enum class KinematicSign { Physical, Printed };

struct TirePoly {
  // F_y(a) = p1 a^4 + p2 a^3 + p3 a^2 + p4 a + p5
  Eigen::VectorXd p;
  double epsilon = 1e-4;
  double saturation_band = 0.0075;
  double saturation_value = 4.0e4;

  static TirePoly front();
  static TirePoly rear();
};

struct VehicleParams {
  double l_f = 0.902, l_r = 0.638;
  double m = 196.0, inertia = 93.0;
  // Pacejka shape constants; see README for why d and b differ from the
  // printed table.
  double d_f = 1134.8, c_f = 1.6, b_f = 12.82;
  double d_r = 919.2, c_r = 1.6, b_r = 12.67;
  // mu multiplies m g in the longitudinal resistance. The table value 1.4
  // is read as a percentage; see README.
  double mu = 0.014, rho = 1.225, g = 9.81;
  double cda_f = 1.64, cda_l = 1.82;

  TirePoly tire_front = TirePoly::front();
  TirePoly tire_rear = TirePoly::rear();

  SlipConvention slip = SlipConvention::Physical;
  KinematicSign kinematics = KinematicSign::Physical;

  /// Lower admissible v_x for LPV instantiation.
  double vx_min = 2.0;

  /// Nominal parameter table taken literally (d = 8.255, b = 6.1, mu = 1.4).
  static VehicleParams printed_table();
  void validate() const;
};

struct Disturbance {
  double slope = 0.0;  // rad
  double wind = 0.0;   // m/s, lateral
};

struct LpvMatrices {
  Matrix5 a = Matrix5::Zero();
  Matrix52 b = Matrix52::Zero();
};

struct SlipAngles {
  double front = 0.0;
  double rear = 0.0;
};

double tire_stiffness(double alpha, const TirePoly& poly);
double pacejka_force(double alpha, double d, double c, double b);

SlipAngles slip_angles_lpv(const State& s, const Input& u, const VehicleParams& p);
SlipAngles slip_angles_plant(const State& s, const Input& u, const VehicleParams& p);

LpvMatrices lpv_matrices(const Scheduling& zeta, double cf, double cr, const VehicleParams& p);

/// Scheduling vector and stiffness evaluated at an operating point.
Scheduling scheduling_of(const State& s, const Input& u);
LpvMatrices lpv_at(const State& s, const Input& u, const VehicleParams& p);

std::pair<Matrix5, Matrix52> discretize_euler(const LpvMatrices& m, double ts);

/// The control-design nonlinear model evaluated directly (tire forces from
/// the stiffness polynomial).
State lpv_derivatives(const State& s, const Input& u, const VehicleParams& p);

/// High-fidelity plant: Pacejka forces, arctangent slips, drag, slope and wind.
State plant_derivatives(const State& s, const Input& u, const Disturbance& d,
                        const VehicleParams& p);
State plant_step_rk4(const State& s, const Input& u, const Disturbance& d,
                     const VehicleParams& p, double h);

/// Least-squares fit of F_y(alpha) = p1 alpha^n + ... + p_{n+1}.
TirePoly fit_tire_poly(const std::vector<std::pair<double, double>>& samples, int order = 4);

/// Lateral force implied by the stiffness model, C(alpha) * alpha.
double tire_force_lpv(double alpha, const TirePoly& poly);

VehicleParams load_vehicle_params(const std::string& path);
void save_vehicle_params(const VehicleParams& p, const std::string& path);

}  // namespace zonotube
