#include "zonotube/invariant.hpp"
#include "zonotube/mpc.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace zonotube;

namespace {

GainSchedule reference_gains() {
  return load_gains(std::string(ZONOTUBE_SOURCE_DIR) + "/data/reference_gains.json");
}

// Input that holds v_x constant on flat ground with no wind.
Input trim(double vx, const VehicleParams& p) {
  return {0.0, p.mu * p.g + 0.5 * p.rho * p.cda_f * vx * vx / p.m};
}

State straight(double vx) {
  State s = State::Zero();
  s(kVx) = vx;
  return s;
}

std::vector<State> constant_reference(const State& r, int hp) { return std::vector<State>(hp + 1, r); }

// Double integrator, horizon n, position target 1: stacked QP and its
// condensed least-squares solution.
struct DoubleIntegrator {
  int n = 10;
  double dt = 0.1, weight = 0.1;

  QpProblem qp() const {
    const int nv = 3 * n;  // x_1..x_n (2 each), u_0..u_{n-1}
    QpProblem p;
    p.h = Eigen::MatrixXd::Zero(nv, nv);
    p.q = Eigen::VectorXd::Zero(nv);
    p.a = Eigen::MatrixXd::Zero(2 * n, nv);
    p.l = Eigen::VectorXd::Zero(2 * n);
    for (int k = 0; k < n; ++k) {
      p.h(2 * k, 2 * k) = 2.0;
      p.q(2 * k) = -2.0;
      p.h(2 * n + k, 2 * n + k) = 2.0 * weight;
      // x_{k+1} - A x_k - B u_k = 0
      p.a.block(2 * k, 2 * k, 2, 2).setIdentity();
      if (k > 0) {
        p.a(2 * k, 2 * (k - 1)) = -1.0;
        p.a(2 * k, 2 * (k - 1) + 1) = -dt;
        p.a(2 * k + 1, 2 * (k - 1) + 1) = -1.0;
      }
      p.a(2 * k, 2 * n + k) = -0.5 * dt * dt;
      p.a(2 * k + 1, 2 * n + k) = -dt;
    }
    p.u = p.l;
    return p;
  }

  Eigen::VectorXd oracle() const {
    // p_k = sum_{j<k} ((k - j) - 1/2) dt^2 u_j from rest.
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k <= n; ++k)
      for (int j = 0; j < k; ++j) g(k - 1, j) = (k - j - 0.5) * dt * dt;
    const Eigen::MatrixXd lhs = g.transpose() * g + weight * Eigen::MatrixXd::Identity(n, n);
    return lhs.ldlt().solve(g.transpose() * Eigen::VectorXd::Ones(n));
  }
};

}  // namespace

TEST_SUITE("qp") {

TEST_CASE("unconstrained tracking matches least squares") {
  const DoubleIntegrator di;
  const QpResult r = solve_qp(di.qp());
  REQUIRE(r.status == QpStatus::Optimal);
  const Eigen::VectorXd want = di.oracle();
  CHECK((r.x.tail(di.n) - want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("box constraints are respected") {
  const DoubleIntegrator di;
  QpProblem p = di.qp();
  const Eigen::Index m = p.a.rows();
  p.a.conservativeResize(m + di.n, Eigen::NoChange);
  p.a.bottomRows(di.n).setZero();
  p.a.bottomRightCorner(di.n, di.n).setIdentity();
  p.l.conservativeResize(m + di.n);
  p.u.conservativeResize(m + di.n);
  p.l.tail(di.n).setConstant(-0.5);
  p.u.tail(di.n).setConstant(0.5);
  const QpResult r = solve_qp(p);
  REQUIRE(r.status == QpStatus::Optimal);
  CHECK(r.x.tail(di.n).maxCoeff() <= 0.5 + 1e-6);
  CHECK(r.x.tail(di.n).maxCoeff() >= 0.5 - 1e-6);  // the unconstrained optimum exceeds the box
}

TEST_CASE("infeasible bounds") {
  QpProblem p = DoubleIntegrator{}.qp();
  p.l(3) = 1.0;
  p.u(3) = 0.5;
  CHECK(solve_qp(p).status == QpStatus::PrimalInfeasible);

  // Two contradictory rows on the same variable.
  QpProblem c;
  c.h = Eigen::MatrixXd::Identity(1, 1);
  c.q = Eigen::VectorXd::Zero(1);
  c.a = Eigen::MatrixXd::Ones(2, 1);
  c.l = (Eigen::VectorXd(2) << 1.0, -INFINITY).finished();
  c.u = (Eigen::VectorXd(2) << INFINITY, 0.0).finished();
  CHECK(solve_qp(c).status == QpStatus::PrimalInfeasible);
}

TEST_CASE("malformed problems throw") {
  QpProblem p = DoubleIntegrator{}.qp();
  p.q(0) = NAN;
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
  QpProblem s = DoubleIntegrator{}.qp();
  s.l.conservativeResize(3);
  CHECK_THROWS_AS(solve_qp(s), std::invalid_argument);
}

TEST_CASE("warm start at the optimum") {
  const QpProblem p = DoubleIntegrator{}.qp();
  const QpResult cold = solve_qp(p);
  REQUIRE(cold.status == QpStatus::Optimal);
  const QpResult warm = solve_qp(p, {}, QpWarmStart{cold.x, cold.y});
  CHECK(warm.status == QpStatus::Optimal);
  CHECK(warm.iterations <= 5);
  CHECK(warm.iterations <= cold.iterations);
}

}  // TEST_SUITE

TEST_SUITE("mpc") {

TEST_CASE("stacked QP layout") {
  const GainSchedule gs = reference_gains();
  const VehicleParams p;
  for (int hp : {1, 5}) {
    MpcConfig cfg;
    cfg.hp = hp;
    TubeMpc mpc(gs, p, disturbance_set(default_disturbance_bounds()), cfg);
    const State x = straight(5.0);
    const Input u = trim(5.0, p);
    const auto r = constant_reference(x, hp);
    const MpcSolution s = mpc.step(x, u, r);
    REQUIRE(s.status == MpcStatus::Optimal);

    const QpProblem qp = build_qp(x, u, s.models, r, mpc.last_tube(), Terminal{gs.terminal->set, gs.p}, cfg);
    CHECK(qp.num_variables() == 7 * hp);
    // Dynamics, du box, cumulative u box, then v_x, v_y, omega per step.
    CHECK(qp.num_constraints() == 5 * hp + 4 * hp + 3 * hp);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(qp.h).eigenvalues().minCoeff() >= -1e-10);

    // No state row touches the position or heading axes.
    for (Eigen::Index row = 9 * hp; row < qp.num_constraints(); ++row)
      for (int i = 0; i < hp; ++i) {
        CHECK(qp.a(row, 5 * i + kPos) == 0.0);
        CHECK(qp.a(row, 5 * i + kHeading) == 0.0);
      }

    // At equilibrium with the reference on the state nothing moves.
    CHECK(s.du.cwiseAbs().maxCoeff() < 1e-5);
    for (int i = 0; i < hp; ++i) CHECK((s.u.row(i).transpose() - u).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("cold start repeats the measured scheduling point") {
  const GainSchedule gs = reference_gains();
  TubeMpc mpc(gs, VehicleParams{}, disturbance_set(default_disturbance_bounds()));
  State x = straight(6.0);
  x(kOmega) = 0.1;
  const Input u(0.05, 0.5);
  const MpcSolution s = mpc.step(x, u, constant_reference(x, 5));
  const Scheduling z0 = gs.bounds.project(scheduling_of(x, u));
  for (const auto& z : s.zeta) CHECK((z - z0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("steady cornering respects the tightened bounds") {
  const VehicleParams p;
  TubeMpc mpc(reference_gains(), p, disturbance_set(default_disturbance_bounds()));
  State r = straight(5.0);
  r(kOmega) = 0.3;
  State x = straight(5.0);
  Input u = trim(5.0, p);
  for (int tick = 0; tick < 40; ++tick) {
    const MpcSolution s = mpc.step(x, u, constant_reference(r, 5));
    REQUIRE(s.status == MpcStatus::Optimal);
    CHECK(constraint_violation(s, u, mpc.last_tube(), mpc.config()) <= 1e-6);
    // Delta-u reconstruction.
    Input prev = u;
    for (int i = 0; i < 5; ++i) {
      CHECK((s.u.row(i).transpose() - prev - s.du.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-14);
      prev = s.u.row(i).transpose();
    }
    x = s.x.row(1).transpose();
    u = s.first_input();
  }
  CHECK(std::abs(x(kOmega) - 0.3) < 0.02);
}

TEST_CASE("cost does not increase under a constant reference") {
  const VehicleParams p;
  TubeMpc mpc(reference_gains(), p, disturbance_set(default_disturbance_bounds()));
  const State r = straight(6.0);
  State x = straight(5.0);
  Input u = trim(5.0, p);
  double last = INFINITY;
  for (int tick = 0; tick < 60; ++tick) {
    const MpcSolution s = mpc.step(x, u, constant_reference(r, 5));
    REQUIRE(s.status == MpcStatus::Optimal);
    CHECK(s.cost <= last + 1e-6 * std::max(1.0, last));
    last = s.cost;
    x = s.x.row(1).transpose();
    u = s.first_input();
  }
  CHECK(std::abs(x(kVx) - 6.0) < 0.05);
}

TEST_CASE("empty tube falls back") {
  const VehicleParams p;
  MpcConfig cfg;
  cfg.x_box = Box((Vector(5) << 4.99, -0.001, -0.001, -INFINITY, -INFINITY).finished(),
                  (Vector(5) << 5.01, 0.001, 0.001, INFINITY, INFINITY).finished());
  TubeMpc mpc(reference_gains(), p, disturbance_set(default_disturbance_bounds()), cfg);
  const Input u = trim(5.0, p);
  const MpcSolution s = mpc.step(straight(5.0), u, constant_reference(straight(5.0), 5));
  CHECK(s.status == MpcStatus::Fallback);
  CHECK(s.degraded);
  CHECK(mpc.consecutive_degraded() == 1);
  CHECK(constraint_violation(s, u, mpc.last_tube(), cfg) >= 0.0);
  for (int i = 0; i < 5; ++i) CHECK(cfg.u_box.contains(s.u.row(i).transpose(), 1e-12));
}

TEST_CASE("configuration is validated") {
  MpcConfig cfg;
  cfg.hp = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  TubeMpc mpc(reference_gains(), VehicleParams{}, disturbance_set(default_disturbance_bounds()));
  CHECK_THROWS_AS(mpc.step(straight(5.0), Input::Zero(), constant_reference(straight(5.0), 3)),
                  std::invalid_argument);
}

}  // TEST_SUITE
