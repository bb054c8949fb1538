#pragma once

#include "zonotube/qp.hpp"
#include "zonotube/reachability.hpp"
#include "zonotube/scheduling.hpp"
#include "zonotube/sets.hpp"
#include "zonotube/vehicle.hpp"

#include <optional>
#include <vector>

namespace zonotube {

struct MpcConfig {
  int hp = 5;
  double ts = 0.033;
  Matrix5 q = default_q();
  Eigen::Matrix2d r = default_r();
  Box x_box = default_state_box();
  Box u_box = default_input_box();
  Eigen::Vector2d du_max{0.05, 0.5};
  /// States penalized against the reference and by the terminal cost.
  std::vector<int> tracked{kVx, kOmega};
  /// Euler substeps per prediction step (1 = single step at ts).
  int prediction_substeps = 7;
  bool terminal_constraint = true;
  bool terminal_cost = true;
  QpSettings qp;

  static Matrix5 default_q();
  static Eigen::Matrix2d default_r();
  static Box default_state_box();
  static Box default_input_box();
  void validate() const;
};

enum class MpcStatus { Optimal, MaxIterations, Infeasible, Fallback };

std::string to_string(MpcStatus s);

struct MpcSolution {
  Eigen::MatrixXd du;  // hp x 2
  Eigen::MatrixXd u;   // hp x 2
  Eigen::MatrixXd x;   // (hp + 1) x 5
  std::vector<Scheduling> zeta;
  std::vector<LpvMatrices> models;  // frozen prediction models, one per step
  double cost = 0.0;
  MpcStatus status = MpcStatus::Infeasible;
  QpStatus qp_status = QpStatus::MaxIterations;
  bool degraded = false;
  bool terminal_verified = true;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double solve_us = 0.0;  // whole mpc step, wall clock
  Vector tube_radius;     // hull radius of the last tube set
  Eigen::VectorXd qp_x, qp_y;

  Input first_input() const { return u.row(0).transpose(); }
};

/// Frozen prediction model at a scheduling point: the operating point is
/// projected into the scheduling box before the stiffness is evaluated.
LpvMatrices frozen_model(const State& s, const Input& u, const VehicleParams& p,
                         const SchedulingBounds& bounds);

/// Discrete prediction pair for one step of length ts split into `substeps`
/// Euler steps with the input held.
std::pair<Matrix5, Matrix52> prediction_model(const LpvMatrices& m, double ts, int substeps);

/// Terminal ingredients expressed in reference-deviation coordinates.
struct Terminal {
  std::optional<Zonotope> set;  // chi_f around the origin
  Matrix5 p = Matrix5::Identity();
};

/// Dense stacked QP over z = [x_1 .. x_hp, du_0 .. du_{hp-1}].
/// `r` holds hp + 1 reference states (only tracked entries are used).
QpProblem build_qp(const State& x0, const Input& u_prev, const std::vector<LpvMatrices>& models,
                   const std::vector<State>& r, const TubeSequence& tube, const Terminal& term,
                   const MpcConfig& cfg);

/// Box used for the terminal rows: interval hull of chi_f shifted to the
/// terminal reference on tracked axes, restricted to axes with finite state
/// bounds.
Box terminal_box(const Zonotope& chi_f, const State& r_end, const MpcConfig& cfg);

/// Exact check that the terminal prediction lies in the shifted chi_f on the
/// axes that the terminal rows constrain.
bool terminal_contains(const Zonotope& chi_f, const State& x_end, const State& r_end,
                       const MpcConfig& cfg, double tol = 1e-6);

/// Largest violation of the MPC constraints by a returned trajectory.
double constraint_violation(const MpcSolution& s, const Input& u_prev, const TubeSequence& tube,
                            const MpcConfig& cfg);

/// Tube MPC with the shifted-solution scheduling trajectory.
class TubeMpc {
 public:
  TubeMpc(GainSchedule gains, VehicleParams params, Zonotope w, MpcConfig cfg = {});

  /// One receding-horizon step. `r` holds hp + 1 reference states.
  MpcSolution step(const State& x, const Input& u_prev, const std::vector<State>& r);

  const std::optional<MpcSolution>& previous() const { return previous_; }
  const TubeSequence& last_tube() const { return tube_; }
  int consecutive_degraded() const { return degraded_run_; }
  const MpcConfig& config() const { return cfg_; }
  const GainSchedule& gains() const { return gains_; }
  void reset();

 private:
  std::vector<Scheduling> scheduling_trajectory(const State& x, const Input& u_prev,
                                                std::vector<LpvMatrices>& models) const;
  MpcSolution fallback(const State& x, const Input& u_prev, const std::vector<LpvMatrices>& models) const;

  GainSchedule gains_;
  VehicleParams params_;
  Zonotope w_;
  MpcConfig cfg_;
  Terminal terminal_;
  std::optional<MpcSolution> previous_;
  TubeSequence tube_;
  int degraded_run_ = 0;
};

}  // namespace zonotube
