#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace zonotube {

/// min 1/2 x'Hx + q'x  s.t.  l <= A x <= u  (equalities as l = u).
struct QpProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd q;
  Eigen::MatrixXd a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_constraints() const { return a.rows(); }
  void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, PrimalInfeasible, DualInfeasible };

std::string to_string(QpStatus s);

struct QpSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeasible = 1e-7;
  int max_iterations = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int scaling_iterations = 10;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  bool polish = true;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

/// ADMM operator splitting with Ruiz equilibration, adaptive rho and
/// solution polishing. Never throws on infeasibility; the status says so.
QpResult solve_qp(const QpProblem& qp, const QpSettings& settings = {},
                  const std::optional<QpWarmStart>& warm = std::nullopt);

}  // namespace zonotube
