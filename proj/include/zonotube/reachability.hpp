#pragma once

#include "zonotube/scheduling.hpp"
#include "zonotube/sets.hpp"
#include "zonotube/vehicle.hpp"

#include <string>
#include <vector>

namespace zonotube {

struct TubeOptions {
  Eigen::Index p_max = 0;   // <= 0: 5 n
  bool start_from_w = true;  // false: Phi_0 is the null zonotope
  Eigen::Index max_vertices = 100000;
};

/// Phi_0 = W (or {0}); Phi_{i+1} = A_i Phi_i (+) W for each transition A_i.
std::vector<Zonotope> propagate_tube(const std::vector<Matrix>& transitions, const Zonotope& w,
                                     const TubeOptions& opt = {});

/// Same recursion on vertex polytopes (exact hulls). Throws past max_vertices.
std::vector<VPolytope> propagate_tube_polytope(const std::vector<Matrix>& transitions,
                                               const Zonotope& w, const TubeOptions& opt = {});

struct TubeSequence {
  std::vector<Zonotope> phi;      // H_p + 1
  std::vector<Box> states;        // H_p + 1
  std::vector<Box> inputs;        // H_p
  bool any_empty = false;
};

/// X~_i = X (-) Phi_i and U~_i = U (-) K_i Phi_i.
TubeSequence tighten_constraints(const std::vector<Zonotope>& phi, const Box& x, const Box& u,
                                 const std::vector<Matrix25>& gains);

/// Transitions of the error dynamics along a frozen schedule.
std::vector<Matrix> tube_transitions(const std::vector<LpvMatrices>& models,
                                     const std::vector<Matrix25>& gains, double ts, int substeps);

struct TimingStats {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  int repetitions = 0;
};

struct TubeBenchmark {
  TimingStats zonotope;
  TimingStats polytope;
  double speedup = 0.0;  // mean polytope / mean zonotope
  Eigen::Index final_generators = 0;
  Eigen::Index final_vertices = 0;
  double max_support_gap = 0.0;  // zonotope vs polytope, axis directions
};

/// Times both representations on the same transition sequence. When
/// `csv_path` is non-empty, per-step records are written there.
TubeBenchmark benchmark_tube(const std::vector<Matrix>& transitions, const Zonotope& w,
                             int zonotope_reps, int polytope_reps,
                             const std::string& csv_path = "", const TubeOptions& opt = {});

/// Transitions used by the benchmark: the reference gains along a mild
/// cornering schedule at the design stiffness.
std::vector<Matrix> benchmark_transitions(const GainSchedule& gs, const VehicleParams& p, int hp);

}  // namespace zonotube
