#include "zonotube/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace zonotube::lp {

FeasibilityResult find_feasible(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                const Eigen::VectorXd& b, double tol, int max_iterations) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  FeasibilityResult result;

  // Row signs so that the artificial start x_B = |b| is nonnegative.
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (b(i) < 0) sign(i) = -1.0;

  auto column = [&](Eigen::Index j) -> Eigen::VectorXd {
    if (j < n) return sign.cwiseProduct(a.col(j));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e(j - n) = 1.0;
    return e;
  };

  std::vector<Eigen::Index> basis(static_cast<size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = n + i;
  Eigen::MatrixXd binv = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd xb = sign.cwiseProduct(b);
  Eigen::VectorXd cb = Eigen::VectorXd::Ones(m);

  const double scale = std::max(1.0, xb.cwiseAbs().maxCoeff());
  const double price_tol = tol * scale;
  const Eigen::Index block = std::max<Eigen::Index>(64, 8 * m);
  Eigen::Index price_start = 0;
  int degenerate_run = 0;

  Eigen::VectorXd y(m);
  int it = 0;
  for (; it < max_iterations; ++it) {
    y = binv.transpose() * cb;
    const Eigen::VectorXd ys = y.cwiseProduct(sign);
    const bool bland = degenerate_run > 50;

    // Partial pricing: scan blocks starting at price_start, stop at the first
    // block that offers an improving column.
    Eigen::Index entering = -1;
    double best = -price_tol;
    for (Eigen::Index scanned = 0; scanned < n && entering < 0; scanned += block) {
      const Eigen::Index start = (price_start + scanned) % n;
      const Eigen::Index len = std::min(block, n - scanned);
      for (Eigen::Index k = 0; k < len; ++k) {
        const Eigen::Index j = (start + k) % n;
        const double dj = -ys.dot(a.col(j));
        if (dj < best) {
          best = dj;
          entering = j;
          if (bland) break;
        }
      }
      if (bland && entering >= 0) break;
      if (entering >= 0) price_start = (start + len) % n;
    }
    if (entering < 0) break;

    const Eigen::VectorXd w = binv * column(entering);
    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (w(i) > 1e-12) {
        const double r = xb(i) / w(i);
        if (r < ratio - 1e-15 ||
            (bland && std::abs(r - ratio) <= 1e-15 && leave >= 0 &&
             basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
          ratio = r;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase one

    degenerate_run = ratio <= 1e-14 ? degenerate_run + 1 : 0;

    // Pivot: update x_B and the explicit basis inverse.
    const double piv = w(leave);
    xb -= ratio * w;
    xb(leave) = ratio;
    Eigen::RowVectorXd pivot_row = binv.row(leave) / piv;
    for (Eigen::Index i = 0; i < m; ++i)
      if (i != leave) binv.row(i) -= w(i) * pivot_row;
    binv.row(leave) = pivot_row;
    basis[static_cast<size_t>(leave)] = entering;
    cb(leave) = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) xb(i) = std::max(xb(i), 0.0);
  }

  result.iterations = it;
  result.infeasibility = cb.dot(xb);
  result.feasible = result.infeasibility <= tol * scale;
  y = binv.transpose() * cb;
  result.dual = sign.cwiseProduct(y);
  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<size_t>(i)];
    if (j < n) result.x(j) = xb(i);
  }
  return result;
}

}  // namespace zonotube::lp
