#include "zonotube/reachability.hpp"

#include "zonotube/invariant.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace zonotube {

std::vector<Zonotope> propagate_tube(const std::vector<Matrix>& transitions, const Zonotope& w,
                                     const TubeOptions& opt) {
  const Eigen::Index pm = opt.p_max > 0 ? opt.p_max : 5 * w.dim();
  std::vector<Zonotope> phi;
  phi.reserve(transitions.size() + 1);
  phi.push_back(opt.start_from_w ? w : Zonotope::origin(w.dim()));
  for (const auto& a : transitions)
    phi.push_back(reduce_generators(minkowski_sum(linear_image(a, phi.back()), w), pm));
  return phi;
}

std::vector<VPolytope> propagate_tube_polytope(const std::vector<Matrix>& transitions,
                                               const Zonotope& w, const TubeOptions& opt) {
  const VPolytope wv = vertices_of(w);
  std::vector<VPolytope> phi;
  phi.reserve(transitions.size() + 1);
  phi.push_back(opt.start_from_w ? wv : VPolytope(Matrix::Zero(w.dim(), 1)));
  for (const auto& a : transitions) {
    phi.push_back(poly_minkowski_sum(poly_linear_image(a, phi.back()), wv));
    if (phi.back().num_vertices() > opt.max_vertices)
      throw std::runtime_error("propagate_tube_polytope: vertex count exceeds " +
                               std::to_string(opt.max_vertices));
  }
  return phi;
}

TubeSequence tighten_constraints(const std::vector<Zonotope>& phi, const Box& x, const Box& u,
                                 const std::vector<Matrix25>& gains) {
  if (phi.empty() || gains.size() + 1 != phi.size())
    throw std::invalid_argument("tighten_constraints: need one gain per prediction step");
  TubeSequence t;
  t.phi = phi;
  for (size_t i = 0; i < phi.size(); ++i) {
    t.states.push_back(box_erode_zonotope(x, phi[i]));
    t.any_empty = t.any_empty || t.states.back().is_empty();
    if (i < gains.size()) {
      t.inputs.push_back(box_erode_zonotope(u, linear_image(gains[i], phi[i])));
      t.any_empty = t.any_empty || t.inputs.back().is_empty();
    }
  }
  return t;
}

std::vector<Matrix> tube_transitions(const std::vector<LpvMatrices>& models,
                                     const std::vector<Matrix25>& gains, double ts, int substeps) {
  if (models.size() != gains.size())
    throw std::invalid_argument("tube_transitions: one gain per model required");
  std::vector<Matrix> out;
  out.reserve(models.size());
  for (size_t i = 0; i < models.size(); ++i)
    out.push_back(error_transition(models[i], gains[i], ts, substeps));
  return out;
}

namespace {

TimingStats summarize(std::vector<double> us) {
  TimingStats s;
  s.repetitions = static_cast<int>(us.size());
  if (us.empty()) return s;
  double sum = 0.0;
  for (double v : us) sum += v;
  s.mean_us = sum / static_cast<double>(us.size());
  std::sort(us.begin(), us.end());
  s.median_us = us[us.size() / 2];
  s.p99_us = us[std::min(us.size() - 1, static_cast<size_t>(0.99 * static_cast<double>(us.size())))];
  return s;
}

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

}  // namespace

TubeBenchmark benchmark_tube(const std::vector<Matrix>& transitions, const Zonotope& w,
                             int zonotope_reps, int polytope_reps, const std::string& csv_path,
                             const TubeOptions& opt) {
  if (zonotope_reps < 1 || polytope_reps < 1)
    throw std::invalid_argument("benchmark_tube: repetition counts must be positive");
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw std::runtime_error("cannot write benchmark CSV: " + csv_path);
    csv << "rep,step,representation,microseconds,count\n" << std::setprecision(17);
  }
  const Eigen::Index pm = opt.p_max > 0 ? opt.p_max : 5 * w.dim();
  TubeBenchmark out;

  std::vector<double> zono_us;
  zono_us.reserve(static_cast<size_t>(zonotope_reps));
  std::vector<Zonotope> zono;
  std::vector<double> step_us(transitions.size() + 1);
  for (int rep = 0; rep < zonotope_reps; ++rep) {
    zono.clear();
    const auto t0 = Clock::now();
    auto prev = t0;
    zono.push_back(opt.start_from_w ? w : Zonotope::origin(w.dim()));
    for (size_t i = 0; i < transitions.size(); ++i) {
      zono.push_back(reduce_generators(minkowski_sum(linear_image(transitions[i], zono.back()), w), pm));
      const auto now = Clock::now();
      step_us[i + 1] = micros(prev, now);
      prev = now;
    }
    zono_us.push_back(micros(t0, prev));
    if (csv.is_open())
      for (size_t i = 1; i < zono.size(); ++i)
        csv << rep << ',' << i << ",zonotope," << step_us[i] << ',' << zono[i].num_generators() << '\n';
  }

  std::vector<double> poly_us;
  std::vector<VPolytope> poly;
  const VPolytope wv = vertices_of(w);
  for (int rep = 0; rep < polytope_reps; ++rep) {
    poly.clear();
    const auto t0 = Clock::now();
    auto prev = t0;
    poly.push_back(opt.start_from_w ? wv : VPolytope(Matrix::Zero(w.dim(), 1)));
    for (size_t i = 0; i < transitions.size(); ++i) {
      poly.push_back(poly_minkowski_sum(poly_linear_image(transitions[i], poly.back()), wv));
      const auto now = Clock::now();
      step_us[i + 1] = micros(prev, now);
      prev = now;
    }
    poly_us.push_back(micros(t0, prev));
    if (csv.is_open())
      for (size_t i = 1; i < poly.size(); ++i)
        csv << rep << ',' << i << ",polytope," << step_us[i] << ',' << poly[i].num_vertices() << '\n';
  }

  out.zonotope = summarize(zono_us);
  out.polytope = summarize(poly_us);
  out.speedup = out.polytope.mean_us / out.zonotope.mean_us;
  out.final_generators = zono.back().num_generators();
  out.final_vertices = poly.back().num_vertices();
  for (Eigen::Index i = 0; i < w.dim(); ++i)
    for (double sgn : {1.0, -1.0}) {
      const Vector d = sgn * Vector::Unit(w.dim(), i);
      out.max_support_gap =
          std::max(out.max_support_gap, std::abs(support(zono.back(), d) - support(poly.back(), d)));
    }
  return out;
}

std::vector<Matrix> benchmark_transitions(const GainSchedule& gs, const VehicleParams& p, int hp) {
  std::vector<Matrix> out;
  for (int i = 0; i < hp; ++i) {
    const Scheduling zeta(4.0 + 0.25 * i, 0.05 * i, 0.02 * i);
    const LpvMatrices m = lpv_matrices(zeta, gs.design.stiffness, gs.design.stiffness, p);
    out.push_back(error_transition(m, gain_at(zeta, gs), gs.design.ts, gs.design.substeps));
  }
  return out;
}

}  // namespace zonotube
