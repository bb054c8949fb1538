#include "zonotube/mpc.hpp"

#include "zonotube/invariant.hpp"
#include "zonotube/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zonotube {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_axis(const Box& b, int i) {
  return std::isfinite(b.lower()(i)) || std::isfinite(b.upper()(i));
}

}  // namespace

Matrix5 MpcConfig::default_q() {
  // Normalized by the state box widths.
  const double iota_vx = 14.0, iota_w = 2.8;
  Matrix5 q = Matrix5::Zero();
  q(kVx, kVx) = 0.8 * 0.4 / (iota_vx * iota_vx);
  q(kOmega, kOmega) = 0.8 * 0.6 / (iota_w * iota_w);
  return q;
}

Eigen::Matrix2d MpcConfig::default_r() {
  const double iota_d = 0.534, iota_a = 15.0;
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = 0.2 * 0.5 / (iota_d * iota_d);
  r(1, 1) = 0.2 * 0.5 / (iota_a * iota_a);
  return r;
}

Box MpcConfig::default_state_box() {
  Vector lo(5), hi(5);
  lo << 1.0, -1.0, -1.4, -kInf, -kInf;
  hi << 15.0, 1.0, 1.4, kInf, kInf;
  return Box(lo, hi);
}

Box MpcConfig::default_input_box() {
  return Box(Eigen::Vector2d(-0.267, -2.0), Eigen::Vector2d(0.267, 13.0));
}

void MpcConfig::validate() const {
  if (hp < 1 || hp > 50) throw std::invalid_argument("mpc: horizon must lie in [1, 50]");
  if (!(ts > 0.0)) throw std::invalid_argument("mpc: ts must be positive");
  if (prediction_substeps < 1) throw std::invalid_argument("mpc: prediction_substeps must be >= 1");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 0.0) throw std::invalid_argument("mpc: Q not symmetric");
  if (Eigen::SelfAdjointEigenSolver<Matrix5>(q).eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("mpc: Q not positive semidefinite");
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 0.0 ||
      !(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(r).eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("mpc: R must be symmetric positive definite");
  if (x_box.dim() != 5 || u_box.dim() != 2 || x_box.is_empty() || u_box.is_empty())
    throw std::invalid_argument("mpc: state/input boxes malformed");
  if (!(du_max.array() > 0.0).all()) throw std::invalid_argument("mpc: du_max must be positive");
  for (int t : tracked)
    if (t < 0 || t >= 5) throw std::invalid_argument("mpc: tracked index out of range");
}

std::string to_string(MpcStatus s) {
  switch (s) {
    case MpcStatus::Optimal: return "optimal";
    case MpcStatus::MaxIterations: return "max_iterations";
    case MpcStatus::Infeasible: return "infeasible";
    case MpcStatus::Fallback: return "fallback";
  }
  return "unknown";
}

LpvMatrices frozen_model(const State& s, const Input& u, const VehicleParams& p,
                         const SchedulingBounds& bounds) {
  const Scheduling z = bounds.project(scheduling_of(s, u));
  State sp = s;
  sp(kVx) = z(0);
  sp(kVy) = z(1);
  Input up = u;
  up(kSteer) = z(2);
  VehicleParams q = p;
  q.vx_min = std::min(p.vx_min, bounds.lower(0));
  const SlipAngles sa = slip_angles_lpv(sp, up, q);
  return lpv_matrices(z, tire_stiffness(sa.front, q.tire_front), tire_stiffness(sa.rear, q.tire_rear), q);
}

std::pair<Matrix5, Matrix52> prediction_model(const LpvMatrices& m, double ts, int substeps) {
  if (substeps < 1) throw std::invalid_argument("prediction_model: substeps must be >= 1");
  const double h = ts / substeps;
  const Matrix5 step = Matrix5::Identity() + h * m.a;
  Matrix5 ad = Matrix5::Identity();
  Matrix5 acc = Matrix5::Zero();  // sum of step^j
  for (int j = 0; j < substeps; ++j) {
    acc += ad;
    ad = step * ad;
  }
  return {ad, acc * (h * m.b)};
}

Box terminal_box(const Zonotope& chi_f, const State& r_end, const MpcConfig& cfg) {
  const Box hull = interval_hull(chi_f);
  Vector lo = Vector::Constant(5, -kInf), hi = Vector::Constant(5, kInf);
  for (int i = 0; i < 5; ++i) {
    if (!finite_axis(cfg.x_box, i)) continue;
    const bool tracked = std::find(cfg.tracked.begin(), cfg.tracked.end(), i) != cfg.tracked.end();
    const double c = tracked ? r_end(i) : 0.0;
    lo(i) = c + hull.lower()(i);
    hi(i) = c + hull.upper()(i);
  }
  return Box(lo, hi);
}

bool terminal_contains(const Zonotope& chi_f, const State& x_end, const State& r_end,
                       const MpcConfig& cfg, double tol) {
  std::vector<int> axes;
  for (int i = 0; i < 5; ++i)
    if (finite_axis(cfg.x_box, i)) axes.push_back(i);
  Matrix sel = Matrix::Zero(static_cast<Eigen::Index>(axes.size()), 5);
  Vector pt(static_cast<Eigen::Index>(axes.size()));
  for (size_t k = 0; k < axes.size(); ++k) {
    const int i = axes[k];
    sel(static_cast<Eigen::Index>(k), i) = 1.0;
    const bool tracked = std::find(cfg.tracked.begin(), cfg.tracked.end(), i) != cfg.tracked.end();
    pt(static_cast<Eigen::Index>(k)) = x_end(i) - (tracked ? r_end(i) : 0.0);
  }
  return contains_point(linear_image(sel, chi_f), pt, tol);
}

QpProblem build_qp(const State& x0, const Input& u_prev, const std::vector<LpvMatrices>& models,
                   const std::vector<State>& r, const TubeSequence& tube, const Terminal& term,
                   const MpcConfig& cfg) {
  const int hp = cfg.hp;
  if (static_cast<int>(models.size()) != hp) throw std::invalid_argument("build_qp: need hp models");
  if (static_cast<int>(r.size()) != hp + 1) throw std::invalid_argument("build_qp: need hp + 1 references");
  if (static_cast<int>(tube.states.size()) != hp + 1 || static_cast<int>(tube.inputs.size()) != hp)
    throw std::invalid_argument("build_qp: tube length does not match the horizon");
  if (tube.any_empty) throw std::invalid_argument("build_qp: empty tightened set");

  const Eigen::Index nx = 5 * hp;
  const Eigen::Index n = nx + 2 * hp;
  auto xi = [](int i) -> Eigen::Index { return 5 * (i - 1); };  // x_i, i >= 1
  auto di = [nx](int i) -> Eigen::Index { return nx + 2 * i; };

  // Tracking weights only touch tracked axes.
  Matrix5 track = Matrix5::Zero();
  for (int t : cfg.tracked) track(t, t) = 1.0;
  const Matrix5 q = track * cfg.q * track;
  const Matrix5 pt = cfg.terminal_cost ? Matrix5(track * term.p * track) : q;

  QpProblem qp;
  qp.h = Matrix::Zero(n, n);
  qp.q = Vector::Zero(n);
  for (int i = 1; i <= hp; ++i) {
    const Matrix5& w = i == hp ? pt : q;
    qp.h.block(xi(i), xi(i), 5, 5) += 2.0 * w;
    qp.q.segment(xi(i), 5) -= 2.0 * w * r[static_cast<size_t>(i)];
  }
  for (int i = 0; i < hp; ++i) qp.h.block(di(i), di(i), 2, 2) += 2.0 * cfg.r;

  // Rows: dynamics, du box, cumulative u box, finite state rows.
  std::vector<std::pair<int, int>> state_rows;  // (step, axis)
  const Box tbox = (cfg.terminal_constraint && term.set) ? terminal_box(*term.set, r.back(), cfg)
                                                         : Box(Vector::Constant(5, -kInf), Vector::Constant(5, kInf));
  for (int i = 1; i <= hp; ++i)
    for (int a = 0; a < 5; ++a) {
      double lo = tube.states[static_cast<size_t>(i)].lower()(a);
      double hi = tube.states[static_cast<size_t>(i)].upper()(a);
      if (i == hp) {
        lo = std::max(lo, tbox.lower()(a));
        hi = std::min(hi, tbox.upper()(a));
      }
      if (std::isfinite(lo) || std::isfinite(hi)) state_rows.emplace_back(i, a);
    }
  const Eigen::Index m = 5 * hp + 4 * hp + static_cast<Eigen::Index>(state_rows.size());
  qp.a = Matrix::Zero(m, n);
  qp.l = Vector::Zero(m);
  qp.u = Vector::Zero(m);

  Eigen::Index row = 0;
  for (int i = 0; i < hp; ++i) {
    const auto [ad, bd] = prediction_model(models[static_cast<size_t>(i)], cfg.ts, cfg.prediction_substeps);
    qp.a.block(row, xi(i + 1), 5, 5) = Matrix5::Identity();
    Vector rhs = bd * u_prev;
    if (i == 0)
      rhs += ad * x0;
    else
      qp.a.block(row, xi(i), 5, 5) = -ad;
    for (int j = 0; j <= i; ++j) qp.a.block(row, di(j), 5, 2) = -bd;
    qp.l.segment(row, 5) = rhs;
    qp.u.segment(row, 5) = rhs;
    row += 5;
  }
  for (int i = 0; i < hp; ++i) {
    qp.a.block(row, di(i), 2, 2) = Eigen::Matrix2d::Identity();
    qp.l.segment(row, 2) = -cfg.du_max;
    qp.u.segment(row, 2) = cfg.du_max;
    row += 2;
  }
  for (int i = 0; i < hp; ++i) {
    for (int j = 0; j <= i; ++j) qp.a.block(row, di(j), 2, 2) = Eigen::Matrix2d::Identity();
    const Box& ub = tube.inputs[static_cast<size_t>(i)];
    qp.l.segment(row, 2) = ub.lower() - u_prev;
    qp.u.segment(row, 2) = ub.upper() - u_prev;
    row += 2;
  }
  for (const auto& [i, a] : state_rows) {
    qp.a(row, xi(i) + a) = 1.0;
    double lo = tube.states[static_cast<size_t>(i)].lower()(a);
    double hi = tube.states[static_cast<size_t>(i)].upper()(a);
    if (i == hp) {
      lo = std::max(lo, tbox.lower()(a));
      hi = std::min(hi, tbox.upper()(a));
    }
    qp.l(row) = lo;
    qp.u(row) = hi;
    ++row;
  }
  return qp;
}

double constraint_violation(const MpcSolution& s, const Input& u_prev, const TubeSequence& tube,
                            const MpcConfig& cfg) {
  double v = 0.0;
  auto excess = [&v](double x, double lo, double hi) { v = std::max({v, lo - x, x - hi}); };
  Input prev = u_prev;
  for (int i = 0; i < cfg.hp; ++i) {
    for (int j = 0; j < 2; ++j) {
      excess(s.du(i, j), -cfg.du_max(j), cfg.du_max(j));
      excess(s.u(i, j) - prev(j), -cfg.du_max(j), cfg.du_max(j));
      excess(s.u(i, j), tube.inputs[static_cast<size_t>(i)].lower()(j),
             tube.inputs[static_cast<size_t>(i)].upper()(j));
    }
    prev = s.u.row(i).transpose();
  }
  for (int i = 1; i <= cfg.hp; ++i)
    for (int a = 0; a < 5; ++a)
      excess(s.x(i, a), tube.states[static_cast<size_t>(i)].lower()(a),
             tube.states[static_cast<size_t>(i)].upper()(a));
  return v;
}

// ---- receding horizon ----------------------------------------------------------

TubeMpc::TubeMpc(GainSchedule gains, VehicleParams params, Zonotope w, MpcConfig cfg)
    : gains_(std::move(gains)), params_(std::move(params)), w_(std::move(w)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (w_.dim() != 5) throw std::invalid_argument("TubeMpc: W must be 5-dimensional");
  terminal_.p = gains_.p;
  if (gains_.terminal) terminal_.set = gains_.terminal->set;
}

void TubeMpc::reset() {
  previous_.reset();
  degraded_run_ = 0;
}

std::vector<Scheduling> TubeMpc::scheduling_trajectory(const State& x, const Input& u_prev,
                                                       std::vector<LpvMatrices>& models) const {
  std::vector<Scheduling> zeta;
  models.clear();
  for (int i = 0; i < cfg_.hp; ++i) {
    State s = x;
    Input u = u_prev;
    if (previous_ && previous_->x.rows() == cfg_.hp + 1) {
      s = previous_->x.row(i + 1).transpose();
      u = previous_->u.row(std::min(i + 1, cfg_.hp - 1)).transpose();
    }
    zeta.push_back(gains_.bounds.project(scheduling_of(s, u)));
    models.push_back(frozen_model(s, u, params_, gains_.bounds));
  }
  return zeta;
}

namespace {

void roll_out(MpcSolution& s, const State& x, const std::vector<LpvMatrices>& models, const MpcConfig& cfg) {
  s.x.row(0) = x.transpose();
  for (int i = 0; i < cfg.hp; ++i) {
    const auto [ad, bd] = prediction_model(models[static_cast<size_t>(i)], cfg.ts, cfg.prediction_substeps);
    s.x.row(i + 1) = (ad * s.x.row(i).transpose() + bd * s.u.row(i).transpose()).transpose();
  }
}

double trajectory_cost(const MpcSolution& s, const std::vector<State>& r, const Terminal& term,
                       const MpcConfig& cfg) {
  Matrix5 track = Matrix5::Zero();
  for (int t : cfg.tracked) track(t, t) = 1.0;
  const Matrix5 q = track * cfg.q * track;
  const Matrix5 pt = cfg.terminal_cost ? Matrix5(track * term.p * track) : q;
  double j = 0.0;
  for (int i = 0; i < cfg.hp; ++i) {
    const State e = r[static_cast<size_t>(i)] - s.x.row(i).transpose();
    const Input du = s.du.row(i).transpose();
    j += e.dot(q * e) + du.dot(cfg.r * du);
  }
  const State e = s.x.row(cfg.hp).transpose() - r.back();
  return j + e.dot(pt * e);
}

}  // namespace

MpcSolution TubeMpc::fallback(const State& x, const Input& u_prev,
                              const std::vector<LpvMatrices>& models) const {
  MpcSolution s;
  s.du = Eigen::MatrixXd::Zero(cfg_.hp, 2);
  s.u = Eigen::MatrixXd::Zero(cfg_.hp, 2);
  s.x = Eigen::MatrixXd::Zero(cfg_.hp + 1, 5);
  Input prev = u_prev;
  for (int i = 0; i < cfg_.hp; ++i) {
    Input want = prev;
    if (previous_ && previous_->u.rows() == cfg_.hp)
      want = previous_->u.row(std::min(i + 1, cfg_.hp - 1)).transpose();
    Input du = (want - prev).cwiseMax(-cfg_.du_max).cwiseMin(cfg_.du_max);
    Input u = (prev + du).cwiseMax(cfg_.u_box.lower()).cwiseMin(cfg_.u_box.upper());
    s.du.row(i) = (u - prev).transpose();
    s.u.row(i) = u.transpose();
    prev = u;
  }
  roll_out(s, x, models, cfg_);
  s.status = MpcStatus::Fallback;
  s.degraded = true;
  return s;
}

MpcSolution TubeMpc::step(const State& x, const Input& u_prev, const std::vector<State>& r) {
  const auto t0 = std::chrono::steady_clock::now();
  if (static_cast<int>(r.size()) != cfg_.hp + 1)
    throw std::invalid_argument("mpc step: reference must hold hp + 1 states");

  std::vector<LpvMatrices> models;
  const std::vector<Scheduling> zeta = scheduling_trajectory(x, u_prev, models);

  std::vector<Matrix25> k;
  for (const auto& z : zeta) k.push_back(gain_at(z, gains_));
  const std::vector<Matrix> trans = tube_transitions(models, k, cfg_.ts, gains_.design.substeps);
  tube_ = tighten_constraints(propagate_tube(trans, w_), cfg_.x_box, cfg_.u_box, k);

  MpcSolution sol;
  bool solved = false;
  if (!tube_.any_empty) {
    const QpProblem qp = build_qp(x, u_prev, models, r, tube_, terminal_, cfg_);
    std::optional<QpWarmStart> warm;
    if (previous_ && previous_->qp_x.size() == qp.num_variables() &&
        previous_->qp_y.size() == qp.num_constraints()) {
      const Eigen::Index nx = 5 * cfg_.hp;
      QpWarmStart ws{previous_->qp_x, previous_->qp_y};
      ws.x.segment(0, nx - 5) = previous_->qp_x.segment(5, nx - 5);
      ws.x.segment(nx, 2 * cfg_.hp - 2) = previous_->qp_x.segment(nx + 2, 2 * cfg_.hp - 2);
      ws.x.tail(2).setZero();
      warm = ws;
    }
    const QpResult res = solve_qp(qp, cfg_.qp, warm);
    sol.qp_status = res.status;
    sol.iterations = res.iterations;
    sol.primal_residual = res.primal_residual;
    sol.dual_residual = res.dual_residual;
    if (res.status == QpStatus::Optimal) {
      const Eigen::Index nx = 5 * cfg_.hp;
      sol.du = Eigen::MatrixXd(cfg_.hp, 2);
      sol.u = Eigen::MatrixXd(cfg_.hp, 2);
      sol.x = Eigen::MatrixXd(cfg_.hp + 1, 5);
      sol.x.row(0) = x.transpose();
      Input prev = u_prev;
      for (int i = 0; i < cfg_.hp; ++i) {
        sol.du.row(i) = res.x.segment(nx + 2 * i, 2).transpose();
        prev += sol.du.row(i).transpose();
        sol.u.row(i) = prev.transpose();
        sol.x.row(i + 1) = res.x.segment(5 * i, 5).transpose();
      }
      sol.qp_x = res.x;
      sol.qp_y = res.y;
      sol.status = MpcStatus::Optimal;
      solved = true;
    } else {
      log().warn("mpc: QP {} after {} iterations", to_string(res.status), res.iterations);
    }
  } else {
    log().warn("mpc: tightened constraint set is empty");
  }

  if (!solved) {
    const QpStatus qs = sol.qp_status;
    const int it = sol.iterations;
    sol = fallback(x, u_prev, models);
    sol.qp_status = tube_.any_empty ? QpStatus::PrimalInfeasible : qs;
    sol.iterations = it;
  }
  sol.zeta = zeta;
  sol.models = models;
  sol.tube_radius = hull_radius(tube_.phi.back());
  sol.cost = trajectory_cost(sol, r, terminal_, cfg_);
  if (solved && cfg_.terminal_constraint && terminal_.set) {
    sol.terminal_verified =
        terminal_contains(*terminal_.set, sol.x.row(cfg_.hp).transpose(), r.back(), cfg_);
    if (!sol.terminal_verified) log().info("mpc: terminal state outside chi_f (inside its hull)");
  }
  degraded_run_ = sol.degraded ? degraded_run_ + 1 : 0;
  sol.solve_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  previous_ = sol;
  return sol;
}

}  // namespace zonotube
