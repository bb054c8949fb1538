#pragma once

#include "zonotube/scheduling.hpp"
#include "zonotube/sets.hpp"
#include "zonotube/vehicle.hpp"

#include <vector>

namespace zonotube {

/// Per-axis disturbance bounds b_w = (0.074, 0.192, 0.105, 0, 0).
Vector default_disturbance_bounds();
/// Centered W with one generator per nonzero bound.
Zonotope disturbance_set(const Vector& bounds);

/// Error transition over one prediction step when the local loop runs
/// `substeps` Euler steps of length ts / substeps: (I + h (A + B K))^substeps.
Matrix error_transition(const LpvMatrices& m, const Matrix25& k, double ts, int substeps);

/// Vertex closed loops and W. Construction rejects any vertex with spectral
/// radius >= 1.
class ClosedLoopFamily {
 public:
  ClosedLoopFamily(std::vector<Matrix> vertices, Zonotope w);

  const std::vector<Matrix>& vertices() const { return vertices_; }
  const Zonotope& w() const { return w_; }
  Eigen::Index dim() const { return w_.dim(); }
  std::vector<double> spectral_radii() const;

 private:
  std::vector<Matrix> vertices_;
  Zonotope w_;
};

/// Spectral radii of the vertex closed loops of a gain schedule (no check).
std::vector<double> vertex_spectral_radii(const GainSchedule& gs, const VehicleParams& p);
ClosedLoopFamily closed_loop_family(const GainSchedule& gs, const VehicleParams& p,
                                    const Zonotope& w);

struct RpiOptions {
  double xi = 0.9;
  double r = -1.0;  // <= 0: 1.05 * max axis radius of W
  double epsilon = 1e-4;
  double tol_set = 1e-8;
  int max_p = 2000;
  int max_iterations = 5000;
  Eigen::Index p_max = 0;  // <= 0: 5 n
};

struct E0Result {
  Zonotope set;
  int p_star = 0;
};

struct EkResult {
  Zonotope set;
  int iterations = 0;
};

struct RpiResult {
  Zonotope set;
  int iterations = 0;
  double epsilon_achieved = 0.0;
  /// Factor applied after the iteration so that the reduced set passes
  /// check_rpi; 1 when no scaling was needed.
  double inflation = 1.0;
  bool is_outer_approximation = true;
};

/// Zonotope enclosure of Conv{ union_i A_i omega }, reduced to p_max.
Zonotope one_step_map(const ClosedLoopFamily& f, const Zonotope& omega, Eigen::Index p_max = 0);

E0Result compute_E0(const ClosedLoopFamily& f, double xi, double r, int max_p = 2000,
                    Eigen::Index p_max = 0);
EkResult compute_Ek_star(const ClosedLoopFamily& f, const Zonotope& e0, double tol_set = 1e-8,
                         int max_iterations = 5000, Eigen::Index p_max = 0);
RpiResult compute_mrpi(const ClosedLoopFamily& f, const Zonotope& ek_star, double epsilon,
                       int max_iterations = 5000, Eigen::Index p_max = 0, double tol_set = 1e-8);

/// Exact test on the fixed directions: max_i h(A_i omega, d) + h(W, d) <= h(omega, d) + slack.
bool check_rpi(const ClosedLoopFamily& f, const Zonotope& omega, double slack);

struct TerminalSetReport {
  E0Result e0;
  EkResult ek;
  RpiResult mrpi;
};

TerminalSetReport compute_terminal_set(const ClosedLoopFamily& f, const RpiOptions& opt = {});

}  // namespace zonotube
