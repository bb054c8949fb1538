#include "zonotube/invariant.hpp"

#include "zonotube/log.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace zonotube {

Vector default_disturbance_bounds() {
  Vector b(5);
  b << 0.074, 0.192, 0.105, 0.0, 0.0;
  return b;
}

Zonotope disturbance_set(const Vector& bounds) {
  return compact(Zonotope(Vector::Zero(bounds.size()), Matrix(bounds.cwiseAbs().asDiagonal())));
}

Matrix error_transition(const LpvMatrices& m, const Matrix25& k, double ts, int substeps) {
  if (substeps < 1) throw std::invalid_argument("error_transition: substeps must be >= 1");
  const double h = ts / substeps;
  const Matrix5 step = Matrix5::Identity() + h * (m.a + m.b * k);
  Matrix5 out = Matrix5::Identity();
  for (int i = 0; i < substeps; ++i) out = step * out;
  return out;
}

namespace {

double spectral_radius(const Matrix& a) {
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::Index resolve_pmax(Eigen::Index p_max, Eigen::Index n) { return p_max > 0 ? p_max : 5 * n; }

}  // namespace

ClosedLoopFamily::ClosedLoopFamily(std::vector<Matrix> vertices, Zonotope w)
    : vertices_(std::move(vertices)), w_(std::move(w)) {
  if (vertices_.empty()) throw std::invalid_argument("ClosedLoopFamily: no vertices");
  std::ostringstream bad;
  for (size_t i = 0; i < vertices_.size(); ++i) {
    const Matrix& a = vertices_[i];
    if (a.rows() != w_.dim() || a.cols() != w_.dim())
      throw std::invalid_argument("ClosedLoopFamily: vertex dimension mismatch");
    const double rho = spectral_radius(a);
    if (!(rho < 1.0)) bad << " vertex " << i << " rho=" << rho;
  }
  if (!bad.str().empty())
    throw std::domain_error("closed loop is not contractive:" + bad.str());
}

std::vector<double> ClosedLoopFamily::spectral_radii() const {
  std::vector<double> out;
  for (const auto& a : vertices_) out.push_back(spectral_radius(a));
  return out;
}

namespace {

std::vector<Matrix> vertex_transitions(const GainSchedule& gs, const VehicleParams& p) {
  VehicleParams q = p;
  q.vx_min = std::min(p.vx_min, gs.bounds.lower(0));
  std::vector<Matrix> out;
  for (int i = 0; i < kNumVertices; ++i) {
    const LpvMatrices m =
        lpv_matrices(gs.bounds.vertex(i), gs.design.stiffness, gs.design.stiffness, q);
    out.push_back(error_transition(m, gs.k[static_cast<size_t>(i)], gs.design.ts, gs.design.substeps));
  }
  return out;
}

}  // namespace

std::vector<double> vertex_spectral_radii(const GainSchedule& gs, const VehicleParams& p) {
  std::vector<double> out;
  for (const auto& a : vertex_transitions(gs, p)) out.push_back(spectral_radius(a));
  return out;
}

ClosedLoopFamily closed_loop_family(const GainSchedule& gs, const VehicleParams& p,
                                    const Zonotope& w) {
  return ClosedLoopFamily(vertex_transitions(gs, p), w);
}

Zonotope one_step_map(const ClosedLoopFamily& f, const Zonotope& omega, Eigen::Index p_max) {
  const Eigen::Index pm = resolve_pmax(p_max, f.dim());
  std::vector<Zonotope> images;
  images.reserve(f.vertices().size());
  bool identical = true;
  for (const auto& a : f.vertices()) {
    identical = identical && a == f.vertices().front();
    images.push_back(linear_image(a, omega));
  }
  if (identical) return reduce_generators(images.front(), pm);
  return reduce_generators(enclose_union(images), pm);
}

E0Result compute_E0(const ClosedLoopFamily& f, double xi, double r, int max_p, Eigen::Index p_max) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("compute_E0: xi must lie in (0, 1)");
  const Eigen::Index n = f.dim();
  const Vector w_radius = hull_radius(f.w());
  if (!(r >= w_radius.maxCoeff()))
    throw std::invalid_argument("compute_E0: B(r) must contain W");
  const Eigen::Index pm = resolve_pmax(p_max, n);
  const Zonotope ball = Zonotope::from_box(Box::symmetric(Vector::Constant(n, r)));
  const Zonotope target = scale(xi, ball);

  Zonotope power = ball;  // A^i(B(r))
  Zonotope sum = Zonotope::origin(n);
  for (int p = 1; p <= max_p; ++p) {
    sum = reduce_generators(minkowski_sum(sum, power), pm);
    power = one_step_map(f, power, pm);
    if (support_contained(power, target, 1e-12)) {
      E0Result out;
      out.p_star = p;
      out.set = reduce_generators(minkowski_sum(sum, scale(p * xi / (1.0 - xi), ball)), pm);
      return out;
    }
  }
  throw std::runtime_error("compute_E0: no p* <= " + std::to_string(max_p) +
                           " with A^p(B(r)) inside xi B(r); closed loop insufficiently contractive");
}

EkResult compute_Ek_star(const ClosedLoopFamily& f, const Zonotope& e0, double tol_set,
                         int max_iterations, Eigen::Index p_max) {
  // Forward iteration from E0. Merging each iterate with its predecessor
  // keeps every transient bulge of a non-normal family and diverges, so the
  // iterate simply replaces its predecessor; the stopping test is unchanged.
  const Eigen::Index pm = resolve_pmax(p_max, f.dim());
  Zonotope e = e0;
  for (int k = 1; k <= max_iterations; ++k) {
    Zonotope next = reduce_generators(minkowski_sum(one_step_map(f, e, pm), f.w()), pm);
    if (support_contained(next, e, tol_set)) return {e, k};
    e = std::move(next);
  }
  throw std::runtime_error("compute_Ek_star: no fixed point within " +
                           std::to_string(max_iterations) + " iterations");
}

RpiResult compute_mrpi(const ClosedLoopFamily& f, const Zonotope& ek_star, double epsilon,
                       int max_iterations, Eigen::Index p_max, double tol_set) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("compute_mrpi: epsilon must be positive");
  if (epsilon < tol_set)
    throw std::invalid_argument("compute_mrpi: epsilon below the set tolerance");
  const Eigen::Index pm = resolve_pmax(p_max, f.dim());
  Zonotope omega = ek_star;
  Zonotope increment = ek_star;  // A^k(Omega_0)
  int k = 0;
  while (hull_radius(increment).maxCoeff() > epsilon) {
    if (k == max_iterations)
      throw std::runtime_error("compute_mrpi: precision " + std::to_string(epsilon) +
                               " not reached within " + std::to_string(max_iterations) +
                               " iterations");
    omega = minkowski_sum(one_step_map(f, omega, pm), f.w());
    increment = one_step_map(f, increment, pm);
    ++k;
  }
  RpiResult out;
  out.set = reduce_generators(omega, pm);
  out.iterations = k;
  // Each reduction over-approximates, so the fixed point of the reduced map
  // can miss invariance under the exact map by the reduction error. Scaling
  // by s gives s h(A O, d) + h(W, d) <= s h(O, d) whenever
  // s >= h(W, d) / (h(O, d) - h(A O, d)), so take the largest such s.
  const Matrix& test = test_directions(f.dim());
  double s = 1.0;
  for (Eigen::Index j = 0; j < test.cols(); ++j) {
    const Vector d = test.col(j);
    double img = -std::numeric_limits<double>::infinity();
    for (const auto& a : f.vertices()) img = std::max(img, support(out.set, a.transpose() * d));
    const double hw = support(f.w(), d);
    const double gap = support(out.set, d) - img;
    if (img + hw <= support(out.set, d)) continue;
    if (gap > 0.0) s = std::max(s, hw / gap);
  }
  if (s > 1.0) {
    out.inflation = s * (1.0 + 1e-9);
    out.set = scale(out.inflation, out.set);
  }
  // Largest support of the remaining increment, and of whatever invariance
  // excess the scaling cannot remove (directions W does not excite).
  double eps = hull_radius(increment).maxCoeff();
  for (Eigen::Index j = 0; j < test.cols(); ++j) {
    const Vector d = test.col(j);
    double img = -std::numeric_limits<double>::infinity();
    for (const auto& a : f.vertices()) img = std::max(img, support(out.set, a.transpose() * d));
    eps = std::max({eps, support(increment, d), img + support(f.w(), d) - support(out.set, d)});
  }
  out.epsilon_achieved = eps;
  out.is_outer_approximation = true;
  return out;
}

bool check_rpi(const ClosedLoopFamily& f, const Zonotope& omega, double slack) {
  const Matrix& dirs = test_directions(f.dim());
  for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
    const Vector d = dirs.col(j);
    double img = -std::numeric_limits<double>::infinity();
    for (const auto& a : f.vertices()) img = std::max(img, support(omega, a.transpose() * d));
    if (img + support(f.w(), d) > support(omega, d) + slack) return false;
  }
  return true;
}

TerminalSetReport compute_terminal_set(const ClosedLoopFamily& f, const RpiOptions& opt) {
  const double r = opt.r > 0.0 ? opt.r : 1.05 * hull_radius(f.w()).maxCoeff();
  TerminalSetReport rep;
  if (!(r > 0.0)) {
    // W = {0}: the minimal invariant set is the origin.
    const Zonotope origin = Zonotope::origin(f.dim());
    rep.e0 = {origin, 0};
    rep.ek = {origin, 0};
    rep.mrpi.set = origin;
    return rep;
  }
  rep.e0 = compute_E0(f, opt.xi, r, opt.max_p, opt.p_max);
  log().info("E0: p* = {}", rep.e0.p_star);
  rep.ek = compute_Ek_star(f, rep.e0.set, opt.tol_set, opt.max_iterations, opt.p_max);
  log().info("E_k*: {} iterations", rep.ek.iterations);
  rep.mrpi = compute_mrpi(f, rep.ek.set, opt.epsilon, opt.max_iterations, opt.p_max, opt.tol_set);
  log().info("mRPI: {} iterations, epsilon achieved {}", rep.mrpi.iterations,
             rep.mrpi.epsilon_achieved);
  return rep;
}

}  // namespace zonotube
