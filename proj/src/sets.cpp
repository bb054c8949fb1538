#include "zonotube/sets.hpp"

#include "zonotube/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace zonotube {

namespace {

void require_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Center/radius pair that reproduces [l, u] exactly under c - r and c + r.
std::pair<double, double> exact_center_radius(double l, double u) {
  const double c0 = 0.5 * l + 0.5 * u;
  for (double c : {c0, std::nextafter(c0, -kInf), std::nextafter(c0, kInf)}) {
    for (double r0 : {u - c, c - l}) {
      for (double r : {r0, std::nextafter(r0, -kInf), std::nextafter(r0, kInf)}) {
        if (r >= 0 && c + r == u && c - r == l) return {c, r};
      }
    }
  }
  return {c0, 0.5 * (u - l)};
}

}  // namespace

// ---- types -----------------------------------------------------------------

Zonotope::Zonotope(Vector center, Matrix generators)
    : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.cols() == 0) generators_.resize(center_.size(), 0);
  require_dim(generators_.rows(), center_.size(), "Zonotope");
  if (!center_.allFinite() || !generators_.allFinite())
    throw std::invalid_argument("Zonotope: non-finite entries");
}

Zonotope Zonotope::point(const Vector& c) { return Zonotope(c, Matrix(c.size(), 0)); }

Zonotope Zonotope::from_box(const Box& box) {
  if (box.is_empty()) throw std::invalid_argument("Zonotope::from_box: empty box");
  const Eigen::Index n = box.dim();
  Vector c(n);
  Matrix g = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(box.lower()(i)) || !std::isfinite(box.upper()(i)))
      throw std::invalid_argument("Zonotope::from_box: unbounded box");
    auto [ci, ri] = exact_center_radius(box.lower()(i), box.upper()(i));
    c(i) = ci;
    g(i, i) = ri;
  }
  Zonotope z(c, g);
  z.source_lower_ = box.lower();
  z.source_upper_ = box.upper();
  return z;
}

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  require_dim(lower_.size(), upper_.size(), "Box");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (std::isnan(lower_(i)) || std::isnan(upper_(i)))
      throw std::invalid_argument("Box: NaN bound");
    if (lower_(i) > upper_(i)) empty_ = true;
  }
}

Box Box::empty(Eigen::Index n) {
  return Box(Vector::Constant(n, kInf), Vector::Constant(n, -kInf));
}

Box Box::symmetric(const Vector& radius) { return Box(-radius, radius); }

bool Box::contains(const Vector& x, double tol) const {
  require_dim(x.size(), dim(), "Box::contains");
  if (empty_) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) < lower_(i) - tol || x(i) > upper_(i) + tol) return false;
  return true;
}

HPolytope::HPolytope(Matrix h, Vector b) : normals(std::move(h)), offsets(std::move(b)) {
  require_dim(normals.rows(), offsets.size(), "HPolytope");
}

VPolytope::VPolytope(Matrix vertices) : vertices_(std::move(vertices)) {
  if (vertices_.cols() == 0) throw std::invalid_argument("VPolytope: empty vertex list");
}

// ---- zonotope calculus -----------------------------------------------------

Zonotope linear_image(const Matrix& m, const Zonotope& z) {
  require_dim(m.cols(), z.dim(), "linear_image");
  return Zonotope(m * z.center(), m * z.generators());
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
  require_dim(a.dim(), b.dim(), "minkowski_sum");
  Matrix g(a.dim(), a.num_generators() + b.num_generators());
  g << a.generators(), b.generators();
  return Zonotope(a.center() + b.center(), std::move(g));
}

Zonotope scale(double s, const Zonotope& z) { return Zonotope(s * z.center(), s * z.generators()); }

double support(const Zonotope& z, const Vector& d) {
  require_dim(d.size(), z.dim(), "support");
  return d.dot(z.center()) + (d.transpose() * z.generators()).cwiseAbs().sum();
}

Vector hull_radius(const Zonotope& z) { return z.generators().cwiseAbs().rowwise().sum(); }

Box interval_hull(const Zonotope& z) {
  if (z.source_lower()) return Box(*z.source_lower(), *z.source_upper());
  const Vector r = hull_radius(z);
  return Box(z.center() - r, z.center() + r);
}

Box box_erode_zonotope(const Box& x, const Zonotope& z) {
  require_dim(x.dim(), z.dim(), "box_erode_zonotope");
  if (x.is_empty()) return Box::empty(x.dim());
  const Vector r = hull_radius(z);
  Vector lo = x.lower(), hi = x.upper();
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (std::isfinite(lo(i))) lo(i) = lo(i) - z.center()(i) + r(i);
    if (std::isfinite(hi(i))) hi(i) = hi(i) - z.center()(i) - r(i);
  }
  return Box(lo, hi);
}

Zonotope compact(const Zonotope& z) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < z.num_generators(); ++j)
    if (z.generators().col(j).cwiseAbs().maxCoeff() > 0.0) keep.push_back(j);
  if (static_cast<Eigen::Index>(keep.size()) == z.num_generators()) return z;
  Matrix g(z.dim(), static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = z.generators().col(keep[k]);
  return Zonotope(z.center(), std::move(g));
}

Zonotope reduce_generators(const Zonotope& z, Eigen::Index p_max) {
  const Eigen::Index n = z.dim();
  const Eigen::Index p = z.num_generators();
  if (p_max < n) throw std::invalid_argument("reduce_generators: p_max < n");
  if (p <= p_max) return z;

  const Matrix& g = z.generators();
  std::vector<Eigen::Index> order(static_cast<size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> score(static_cast<size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    score[static_cast<size_t>(j)] = g.col(j).lpNorm<1>() - g.col(j).lpNorm<Eigen::Infinity>();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return score[static_cast<size_t>(a)] < score[static_cast<size_t>(b)];
  });

  // Keep the p_max - n largest, box the rest into n axis generators.
  const Eigen::Index n_boxed = p - (p_max - n);
  Vector box = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n_boxed; ++k) box += g.col(order[static_cast<size_t>(k)]).cwiseAbs();
  Matrix out(n, p_max);
  for (Eigen::Index k = n_boxed; k < p; ++k) out.col(k - n_boxed) = g.col(order[static_cast<size_t>(k)]);
  out.rightCols(n) = box.asDiagonal();
  return Zonotope(z.center(), std::move(out));
}

Zonotope enclose_union(const std::vector<Zonotope>& parts) {
  if (parts.empty()) throw std::invalid_argument("enclose_union: no parts");
  const Eigen::Index n = parts.front().dim();
  Eigen::Index p = 0;
  for (const auto& z : parts) {
    require_dim(z.dim(), n, "enclose_union");
    p = std::max(p, z.num_generators());
  }
  const double k = static_cast<double>(parts.size());

  auto padded = [&](const Zonotope& z) {
    Matrix g = Matrix::Zero(n, p);
    g.leftCols(z.num_generators()) = z.generators();
    return g;
  };

  Vector c = Vector::Zero(n);
  Matrix g = Matrix::Zero(n, p);
  for (const auto& z : parts) {
    c += z.center();
    g += padded(z);
  }
  c /= k;
  g /= k;

  Vector residual = Vector::Zero(n);
  for (const auto& z : parts) {
    const Vector r = (z.center() - c).cwiseAbs() + (padded(z) - g).cwiseAbs().rowwise().sum();
    residual = residual.cwiseMax(r);
  }

  Matrix out(n, p + n);
  out << g, Matrix(residual.asDiagonal());
  return compact(Zonotope(c, std::move(out)));
}

bool contains_point(const Zonotope& z, const Vector& x, double tol) {
  require_dim(x.size(), z.dim(), "contains_point");
  const Zonotope zc = compact(z);
  const Eigen::Index n = zc.dim();
  const Eigen::Index p = zc.num_generators();
  const Vector offset = x - zc.center();
  if (p == 0) return offset.cwiseAbs().maxCoeff() <= tol;

  // eta = xi + 1 in [0, 2 + 2 tol]:  R eta = offset + R 1,  eta + s = 2 + 2 tol.
  const double hi = 2.0 + 2.0 * tol;
  Matrix a = Matrix::Zero(n + p, 2 * p);
  a.topLeftCorner(n, p) = zc.generators();
  a.bottomLeftCorner(p, p).setIdentity();
  a.bottomRightCorner(p, p).setIdentity();
  Vector b(n + p);
  b.head(n) = offset + zc.generators().rowwise().sum();
  b.tail(p).setConstant(hi);
  return lp::find_feasible(a, b, tol).feasible;
}

// ---- support-function comparisons ------------------------------------------

const Matrix& test_directions(Eigen::Index n, int random_count) {
  static std::mutex mu;
  static std::map<std::pair<Eigen::Index, int>, Matrix> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, random_count);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  Matrix d(n, 2 * n + random_count);
  d.leftCols(n) = Matrix::Identity(n, n);
  d.middleCols(n, n) = -Matrix::Identity(n, n);
  std::mt19937_64 rng(0x5eed'2024ULL + static_cast<unsigned long long>(n));
  std::normal_distribution<double> normal;
  for (int j = 0; j < random_count; ++j) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    d.col(2 * n + j) = v.normalized();
  }
  return cache.emplace(key, std::move(d)).first->second;
}

bool support_contained(const Zonotope& inner, const Zonotope& outer, double tol) {
  require_dim(inner.dim(), outer.dim(), "support_contained");
  const Matrix& dirs = test_directions(inner.dim());
  for (Eigen::Index j = 0; j < dirs.cols(); ++j)
    if (support(inner, dirs.col(j)) > support(outer, dirs.col(j)) + tol) return false;
  return true;
}

bool support_equal(const Zonotope& a, const Zonotope& b, double tol) {
  return support_contained(a, b, tol) && support_contained(b, a, tol);
}

// ---- vertex polytopes --------------------------------------------------------

double support(const VPolytope& p, const Vector& d) {
  require_dim(d.size(), p.dim(), "support");
  return (d.transpose() * p.vertices()).maxCoeff();
}

VPolytope poly_linear_image(const Matrix& m, const VPolytope& p) {
  require_dim(m.cols(), p.dim(), "poly_linear_image");
  Matrix img = m * p.vertices();
  if (m.rows() == m.cols()) {
    Eigen::FullPivLU<Matrix> lu(m);
    if (lu.rank() == m.rows()) {
      // Invertible maps send extreme points to extreme points.
      VPolytope out(std::move(img));
      out.set_degenerate(p.degenerate());
      return out;
    }
  }
  return convex_hull(img);
}

VPolytope poly_minkowski_sum(const VPolytope& a, const VPolytope& b) {
  require_dim(a.dim(), b.dim(), "poly_minkowski_sum");
  const Eigen::Index na = a.num_vertices(), nb = b.num_vertices();
  Matrix sums(a.dim(), na * nb);
  for (Eigen::Index j = 0; j < nb; ++j)
    sums.middleCols(j * na, na) = a.vertices().colwise() + b.vertices().col(j);
  return convex_hull(sums);
}

VPolytope vertices_of(const Box& box) {
  if (box.is_empty()) throw std::invalid_argument("vertices_of: empty box");
  const Eigen::Index n = box.dim();
  std::vector<Eigen::Index> free_axes;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(box.lower()(i)) || !std::isfinite(box.upper()(i)))
      throw std::invalid_argument("vertices_of: unbounded box");
    if (box.upper()(i) > box.lower()(i)) free_axes.push_back(i);
  }
  const Eigen::Index count = Eigen::Index{1} << free_axes.size();
  Matrix v(n, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    v.col(k) = box.lower();
    for (size_t b = 0; b < free_axes.size(); ++b)
      if ((k >> b) & 1) v(free_axes[b], k) = box.upper()(free_axes[b]);
  }
  VPolytope out(std::move(v));
  out.set_degenerate(static_cast<Eigen::Index>(free_axes.size()) < n);
  return out;
}

VPolytope vertices_of(const Zonotope& z) {
  const Zonotope zc = compact(z);
  const Eigen::Index p = zc.num_generators();
  if (p > 20) throw std::invalid_argument("vertices_of: too many generators to enumerate");
  const Eigen::Index count = Eigen::Index{1} << p;
  Matrix pts(zc.dim(), count);
  for (Eigen::Index k = 0; k < count; ++k) {
    Vector x = zc.center();
    for (Eigen::Index j = 0; j < p; ++j) x += ((k >> j) & 1 ? 1.0 : -1.0) * zc.generators().col(j);
    pts.col(k) = x;
  }
  return convex_hull(pts);
}

VPolytope convex_hull(const Matrix& points, double tol) {
  const Eigen::Index n = points.rows();
  const Eigen::Index total = points.cols();
  if (total == 0) throw std::invalid_argument("convex_hull: no points");

  // Work in the affine hull of the input.
  const Vector centroid = points.rowwise().mean();
  const Matrix centered = points.colwise() - centroid;
  const double scale = std::max(1.0, points.cwiseAbs().maxCoeff());
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol * scale * std::sqrt(static_cast<double>(total)))
    ++rank;

  if (rank == 0) {
    VPolytope out(Matrix(points.col(0)));
    out.set_degenerate(n > 0);
    return out;
  }
  const Matrix y = svd.matrixU().leftCols(rank).transpose() * centered;

  auto argmax = [&](const Vector& d) {
    const Vector vals = d.normalized().transpose() * y;
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < total; ++j) {
      const double gap = vals(j) - vals(best);
      // Ties within tolerance resolve lexicographically so the pick is extreme.
      if (gap > tol * scale) {
        best = j;
      } else if (gap >= -tol * scale) {
        for (Eigen::Index i = 0; i < rank; ++i) {
          if (y(i, j) > y(i, best) + tol * scale) { best = j; break; }
          if (y(i, j) < y(i, best) - tol * scale) break;
        }
      }
    }
    return best;
  };

  std::vector<char> in_hull_set(static_cast<size_t>(total), 0);
  std::vector<Eigen::Index> extreme;
  Matrix lp_a(rank + 1, total);
  auto add_extreme = [&](Eigen::Index j) {
    if (in_hull_set[static_cast<size_t>(j)]) return false;
    in_hull_set[static_cast<size_t>(j)] = 1;
    const auto k = static_cast<Eigen::Index>(extreme.size());
    lp_a.col(k).head(rank) = y.col(j);
    lp_a(rank, k) = 1.0;
    extreme.push_back(j);
    return true;
  };

  for (Eigen::Index i = 0; i < rank; ++i) {
    add_extreme(argmax(Vector::Unit(rank, i)));
    add_extreme(argmax(-Vector::Unit(rank, i)));
  }

  if (rank > 1) {
    Vector b(rank + 1);
    for (Eigen::Index q = 0; q < total; ++q) {
      while (!in_hull_set[static_cast<size_t>(q)]) {
        b.head(rank) = y.col(q);
        b(rank) = 1.0;
        const auto k = static_cast<Eigen::Index>(extreme.size());
        const lp::FeasibilityResult r = lp::find_feasible(lp_a.leftCols(k), b, tol);
        if (r.feasible) break;
        const Eigen::Index pick = argmax(r.dual.head(rank));
        if (!add_extreme(pick)) add_extreme(q);
      }
    }
  }

  std::sort(extreme.begin(), extreme.end());
  Matrix v(n, static_cast<Eigen::Index>(extreme.size()));
  for (size_t k = 0; k < extreme.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = points.col(extreme[k]);
  VPolytope out(std::move(v));
  out.set_degenerate(rank < n);
  return out;
}

bool hpoly_contains(const HPolytope& p, const Vector& x, double tol) {
  require_dim(x.size(), p.dim(), "hpoly_contains");
  return ((p.normals * x - p.offsets).array() <= tol).all();
}

}  // namespace zonotube
