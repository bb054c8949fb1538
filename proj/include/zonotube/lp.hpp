#pragma once

#include <Eigen/Dense>

namespace zonotube::lp {

struct FeasibilityResult {
  bool feasible = false;
  /// Sum of artificial variables at the phase-one optimum.
  double infeasibility = 0.0;
  /// Phase-one duals in the caller's row orientation. When infeasible,
  /// y' A <= 0 column-wise and y' b = infeasibility > 0 (Farkas certificate).
  Eigen::VectorXd dual;
  /// Primal point (valid when feasible).
  Eigen::VectorXd x;
  int iterations = 0;
};

/// Phase-one revised simplex for { x >= 0 : A x = b }.
///
/// Dense, meant for few rows (<= ~50) and possibly many columns; pricing is
/// partial over column blocks so interior certificates are found without a
/// full scan.
FeasibilityResult find_feasible(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                const Eigen::VectorXd& b,
                                double tol = 1e-9, int max_iterations = 10000);

}  // namespace zonotube::lp
