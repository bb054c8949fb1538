#include "zonotube/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zonotube {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void QpProblem::validate() const {
  const Index n = q.size();
  const Index m = a.rows();
  if (h.rows() != n || h.cols() != n) throw std::invalid_argument("qp: H must be n x n");
  if (a.cols() != n) throw std::invalid_argument("qp: A must have n columns");
  if (l.size() != m || u.size() != m) throw std::invalid_argument("qp: bound sizes differ from A");
  if (!h.allFinite() || !q.allFinite() || !a.allFinite())
    throw std::invalid_argument("qp: non-finite problem data");
  for (Index i = 0; i < m; ++i)
    if (std::isnan(l(i)) || std::isnan(u(i))) throw std::invalid_argument("qp: NaN bound");
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::PrimalInfeasible: return "primal_infeasible";
    case QpStatus::DualInfeasible: return "dual_infeasible";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityFactor = 1e3;

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double clip_scale(double v) {
  if (v < 1e-4) return 1.0;
  return std::min(v, 1e4);
}

struct Scaled {
  MatrixXd h, a;
  VectorXd q, l, u;
  VectorXd d, e;  // x = D xs, constraint rows scaled by E
  double c = 1.0;
};

Scaled equilibrate(const QpProblem& qp, int iterations) {
  Scaled s;
  s.h = qp.h;
  s.a = qp.a;
  s.q = qp.q;
  const Index n = qp.num_variables();
  const Index m = qp.num_constraints();
  s.d = VectorXd::Ones(n);
  s.e = VectorXd::Ones(m);
  for (int it = 0; it < iterations; ++it) {
    VectorXd dx(n), de(m);
    for (Index j = 0; j < n; ++j) {
      double norm = s.h.col(j).cwiseAbs().maxCoeff();
      if (m > 0) norm = std::max(norm, s.a.col(j).cwiseAbs().maxCoeff());
      dx(j) = 1.0 / std::sqrt(clip_scale(norm));
    }
    for (Index i = 0; i < m; ++i) de(i) = 1.0 / std::sqrt(clip_scale(s.a.row(i).cwiseAbs().maxCoeff()));
    s.h = dx.asDiagonal() * s.h * dx.asDiagonal();
    s.a = de.asDiagonal() * s.a * dx.asDiagonal();
    s.q = dx.cwiseProduct(s.q);
    s.d = s.d.cwiseProduct(dx);
    s.e = s.e.cwiseProduct(de);
  }
  double mean_col = 0.0;
  for (Index j = 0; j < n; ++j) mean_col += s.h.col(j).cwiseAbs().maxCoeff();
  mean_col /= std::max<Index>(n, 1);
  s.c = 1.0 / clip_scale(std::max(mean_col, inf_norm(s.q)));
  s.h *= s.c;
  s.q *= s.c;
  s.l = s.e.cwiseProduct(qp.l);
  s.u = s.e.cwiseProduct(qp.u);
  for (Index i = 0; i < m; ++i) {
    if (qp.l(i) == -kInf) s.l(i) = -kInf;
    if (qp.u(i) == kInf) s.u(i) = kInf;
  }
  return s;
}

VectorXd project(const VectorXd& v, const VectorXd& l, const VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

VectorXd rho_vector(double rho, const VectorXd& l, const VectorXd& u) {
  VectorXd r(l.size());
  for (Index i = 0; i < l.size(); ++i) {
    if (l(i) == -kInf && u(i) == kInf)
      r(i) = kRhoMin;
    else if (u(i) - l(i) < 1e-4 * std::max(1.0, std::abs(l(i))))
      r(i) = kEqualityFactor * rho;
    else
      r(i) = rho;
  }
  return r;
}

double objective(const QpProblem& qp, const VectorXd& x) { return 0.5 * x.dot(qp.h * x) + qp.q.dot(x); }

struct Residuals {
  double prim = 0.0, dual = 0.0;
  double eps_prim = 0.0, eps_dual = 0.0;
};

// Residuals of the unscaled problem evaluated at (x, y) with z = A x.
Residuals unscaled_residuals(const QpProblem& qp, const VectorXd& x, const VectorXd& y,
                             const QpSettings& st) {
  Residuals r;
  const VectorXd ax = qp.a * x;
  const VectorXd z = project(ax, qp.l, qp.u);
  const VectorXd hx = qp.h * x;
  const VectorXd aty = qp.a.transpose() * y;
  r.prim = inf_norm(ax - z);
  r.dual = inf_norm(hx + qp.q + aty);
  r.eps_prim = st.eps_abs + st.eps_rel * std::max(inf_norm(ax), inf_norm(z));
  r.eps_dual = st.eps_abs + st.eps_rel * std::max({inf_norm(hx), inf_norm(aty), inf_norm(qp.q)});
  return r;
}

bool dual_signs_ok(const QpProblem& qp, const VectorXd& x, const VectorXd& y, double tol) {
  const VectorXd ax = qp.a * x;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) > tol && ax(i) < qp.u(i) - tol * std::max(1.0, std::abs(qp.u(i)))) return false;
    if (y(i) < -tol && ax(i) > qp.l(i) + tol * std::max(1.0, std::abs(qp.l(i)))) return false;
  }
  return true;
}

// Solves the equality-constrained QP on the guessed active set.
bool polish(const QpProblem& qp, const VectorXd& x_admm, const VectorXd& y_admm, const QpSettings& st,
            QpResult& res) {
  const Index n = qp.num_variables();
  const Index m = qp.num_constraints();
  const VectorXd ax = qp.a * x_admm;
  std::vector<Index> rows;
  VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    const bool lower = ax(i) - qp.l(i) < -y_admm(i);
    const bool upper = qp.u(i) - ax(i) < y_admm(i);
    if (lower || upper) {
      b(static_cast<Index>(rows.size())) = lower ? qp.l(i) : qp.u(i);
      rows.push_back(i);
    }
  }
  const Index k = static_cast<Index>(rows.size());
  const double delta = 1e-9;
  MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = qp.h;
  for (Index r = 0; r < k; ++r) {
    kkt.block(n + r, 0, 1, n) = qp.a.row(rows[static_cast<size_t>(r)]);
    kkt.block(0, n + r, n, 1) = qp.a.row(rows[static_cast<size_t>(r)]).transpose();
  }
  MatrixXd reg = kkt;
  reg.topLeftCorner(n, n).diagonal().array() += delta;
  reg.bottomRightCorner(k, k).diagonal().array() -= delta;
  Eigen::PartialPivLU<MatrixXd> lu(reg);
  VectorXd rhs(n + k);
  rhs << -qp.q, b.head(k);
  VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 5; ++it) sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return false;

  VectorXd y = VectorXd::Zero(m);
  for (Index r = 0; r < k; ++r) y(rows[static_cast<size_t>(r)]) = sol(n + r);
  const VectorXd x = sol.head(n);
  const Residuals before = unscaled_residuals(qp, x_admm, y_admm, st);
  const Residuals after = unscaled_residuals(qp, x, y, st);
  if (after.prim > std::max(before.prim, after.eps_prim) ||
      after.dual > std::max(before.dual, after.eps_dual))
    return false;
  if (!dual_signs_ok(qp, x, y, 1e-7)) return false;
  res.x = x;
  res.y = y;
  res.primal_residual = after.prim;
  res.dual_residual = after.dual;
  res.polished = true;
  return true;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpSettings& st, const std::optional<QpWarmStart>& warm) {
  qp.validate();
  const Index n = qp.num_variables();
  const Index m = qp.num_constraints();
  QpResult res;
  res.x = VectorXd::Zero(n);
  res.y = VectorXd::Zero(m);

  for (Index i = 0; i < m; ++i)
    if (qp.l(i) > qp.u(i)) {
      res.status = QpStatus::PrimalInfeasible;
      return res;
    }

  const Scaled s = equilibrate(qp, st.scaling_iterations);
  double rho = st.rho;
  VectorXd rv = rho_vector(rho, s.l, s.u);

  VectorXd x = VectorXd::Zero(n);
  VectorXd y = VectorXd::Zero(m);
  if (warm) {
    if (warm->x.size() == n) x = warm->x.cwiseQuotient(s.d);
    if (warm->y.size() == m) y = s.c * warm->y.cwiseQuotient(s.e);
  }
  VectorXd z = project(s.a * x, s.l, s.u);

  auto factor = [&]() {
    MatrixXd k = s.h + s.a.transpose() * rv.asDiagonal() * s.a;
    k.diagonal().array() += st.sigma;
    return Eigen::LLT<MatrixXd>(k);
  };
  Eigen::LLT<MatrixXd> llt = factor();
  if (llt.info() != Eigen::Success) throw std::runtime_error("qp: KKT factorization failed");

  const VectorXd dinv = s.d.cwiseInverse();
  const VectorXd einv = s.e.cwiseInverse();

  for (int it = 1; it <= st.max_iterations; ++it) {
    const VectorXd x_prev = x;
    const VectorXd y_prev = y;
    const VectorXd rhs = st.sigma * x - s.q + s.a.transpose() * (rv.cwiseProduct(z) - y);
    const VectorXd xt = llt.solve(rhs);
    const VectorXd zt = s.a * xt;
    x = st.alpha * xt + (1.0 - st.alpha) * x_prev;
    const VectorXd zr = st.alpha * zt + (1.0 - st.alpha) * z;
    const VectorXd z_new = project(zr + y.cwiseQuotient(rv), s.l, s.u);
    y = y + rv.cwiseProduct(zr - z_new);
    z = z_new;
    res.iterations = it;

    // Convergence on the unscaled problem.
    const VectorXd ax = s.a * x;
    const VectorXd hx = s.h * x;
    const VectorXd aty = s.a.transpose() * y;
    const double prim = inf_norm(einv.cwiseProduct(ax - z));
    const double dual = inf_norm(dinv.cwiseProduct(hx + s.q + aty)) / s.c;
    const double eps_prim =
        st.eps_abs + st.eps_rel * std::max(inf_norm(einv.cwiseProduct(ax)), inf_norm(einv.cwiseProduct(z)));
    const double eps_dual =
        st.eps_abs + st.eps_rel / s.c *
                         std::max({inf_norm(dinv.cwiseProduct(hx)), inf_norm(dinv.cwiseProduct(aty)),
                                   inf_norm(dinv.cwiseProduct(s.q))});
    res.primal_residual = prim;
    res.dual_residual = dual;
    if (prim <= eps_prim && dual <= eps_dual) {
      res.status = QpStatus::Optimal;
      break;
    }

    // Primal infeasibility certificate.
    const VectorXd dy = y - y_prev;
    const double dy_norm = inf_norm(s.e.cwiseProduct(dy));
    if (dy_norm > st.eps_infeasible) {
      const double atdy = inf_norm(dinv.cwiseProduct(s.a.transpose() * dy));
      double bound_term = 0.0;
      bool finite = true;
      for (Index i = 0; i < m && finite; ++i) {
        if (dy(i) > 0.0) {
          if (s.u(i) == kInf) finite = false; else bound_term += s.u(i) * dy(i);
        } else if (dy(i) < 0.0) {
          if (s.l(i) == -kInf) finite = false; else bound_term += s.l(i) * dy(i);
        }
      }
      if (finite && atdy <= st.eps_infeasible * dy_norm && bound_term < -st.eps_infeasible * dy_norm) {
        res.status = QpStatus::PrimalInfeasible;
        res.x = s.d.cwiseProduct(x);
        res.y = s.e.cwiseProduct(dy) / s.c;  // certificate direction
        return res;
      }
    }

    // Dual infeasibility certificate.
    const VectorXd dx = x - x_prev;
    const double dx_norm = inf_norm(s.d.cwiseProduct(dx));
    if (dx_norm > st.eps_infeasible) {
      const double tol = st.eps_infeasible * dx_norm;
      bool unbounded = inf_norm(dinv.cwiseProduct(s.h * dx)) <= s.c * tol && s.q.dot(dx) < -s.c * tol;
      const VectorXd adx = s.a * dx;
      for (Index i = 0; i < m && unbounded; ++i) {
        const double v = einv(i) * adx(i);
        if (s.u(i) < kInf && v > tol) unbounded = false;
        if (s.l(i) > -kInf && v < -tol) unbounded = false;
      }
      if (unbounded) {
        res.status = QpStatus::DualInfeasible;
        res.x = s.d.cwiseProduct(dx);
        return res;
      }
    }

    if (st.adaptive_rho && it % st.adaptive_rho_interval == 0) {
      const double prim_scale = std::max(inf_norm(ax), inf_norm(z));
      const double dual_scale = std::max({inf_norm(hx), inf_norm(aty), inf_norm(s.q)});
      const double sp = inf_norm(ax - z) / std::max(prim_scale, 1e-30);
      const double sd = inf_norm(hx + s.q + aty) / std::max(dual_scale, 1e-30);
      const double rho_new = std::clamp(rho * std::sqrt(sp / std::max(sd, 1e-30)), kRhoMin, kRhoMax);
      if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
        rho = rho_new;
        rv = rho_vector(rho, s.l, s.u);
        llt = factor();
        if (llt.info() != Eigen::Success) throw std::runtime_error("qp: KKT factorization failed");
      }
    }
  }

  res.x = s.d.cwiseProduct(x);
  res.y = s.e.cwiseProduct(y) / s.c;
  if (st.polish && (res.status == QpStatus::Optimal || res.status == QpStatus::MaxIterations)) {
    const VectorXd x_admm = res.x;
    const VectorXd y_admm = res.y;
    if (polish(qp, x_admm, y_admm, st, res)) {
      const Residuals r = unscaled_residuals(qp, res.x, res.y, st);
      if (r.prim <= r.eps_prim && r.dual <= r.eps_dual) res.status = QpStatus::Optimal;
    }
  }
  res.objective = objective(qp, res.x);
  return res;
}

}  // namespace zonotube
