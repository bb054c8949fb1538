#pragma once

#include "zonotube/sets.hpp"
#include "zonotube/vehicle.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace zonotube {

inline constexpr int kNumVertices = 8;
inline constexpr int kNumScheduling = 3;

struct SchedulingBounds {
  Eigen::Vector3d lower{2.0, -0.6, -0.267};
  Eigen::Vector3d upper{10.0, 0.6, 0.267};

  /// Vertex i takes the upper endpoint of variable j when bit j of i is set.
  Scheduling vertex(int i) const;
  /// Clamps into the box; throws if any coordinate is outside by more than
  /// `tolerance` times its interval width.
  Scheduling clamp(const Scheduling& zeta, double tolerance) const;
  Scheduling project(const Scheduling& zeta) const;
  bool contains(const Scheduling& zeta) const;
  void validate() const;
};

/// Terminal set stored next to the gains.
struct TerminalSet {
  Zonotope set;
  double epsilon_achieved = 0.0;
  int iterations = 0;
};

struct DesignInfo {
  double stiffness = 4.0e4;
  double ts = 0.033;
  int substeps = 7;
};

struct GainSchedule {
  SchedulingBounds bounds;
  std::array<Matrix25, kNumVertices> k{};
  std::optional<std::array<Matrix25, kNumVertices>> k_lqr;
  Matrix5 p = Matrix5::Identity();
  double gamma = 0.0;
  DesignInfo design;
  std::optional<TerminalSet> terminal;
  std::string tool;
  std::string date;

  /// Copy with the LQR vertex gains in place of the H-inf ones.
  GainSchedule with_lqr_gains() const;
};

enum class LocalController { HInf, Lqr };

/// Partition-of-unity weights over the 8 box vertices. Coordinates within 1%
/// of the interval width outside the box are clamped (with a warning).
std::array<double, kNumVertices> membership_weights(const Scheduling& zeta,
                                                    const SchedulingBounds& b);

Matrix25 interpolate_gain(const std::array<double, kNumVertices>& weights,
                          const GainSchedule& gs);
Matrix25 interpolate_gain(const std::vector<double>& weights, const GainSchedule& gs);

/// Gain at a scheduling point (clamped per membership_weights policy).
Matrix25 gain_at(const Scheduling& zeta, const GainSchedule& gs);

inline Input local_control(const State& e, const Matrix25& k) { return k * e; }

/// Reads and validates a gains file (schema, vertex count and order, P SPD).
GainSchedule load_gains(const std::string& path);
void save_gains(const GainSchedule& gs, const std::string& path);

/// Parses from an in-memory JSON document (same checks as load_gains).
GainSchedule parse_gains(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_gains(const GainSchedule& gs);

}  // namespace zonotube
