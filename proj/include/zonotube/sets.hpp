#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace zonotube {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Box;

/// Zonotope <c, R> = { c + R xi : |xi|_inf <= 1 }.
///
/// Immutable value type. A zonotope with zero generator columns is a point.
class Zonotope {
 public:
  Zonotope() = default;
  Zonotope(Vector center, Matrix generators);

  static Zonotope point(const Vector& c);
  static Zonotope origin(Eigen::Index n) { return point(Vector::Zero(n)); }
  static Zonotope from_box(const Box& box);

  const Vector& center() const { return center_; }
  const Matrix& generators() const { return generators_; }
  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index num_generators() const { return generators_.cols(); }

  /// Bounds of the box this zonotope was built from, if any. c +- r cannot
  /// always reproduce them bitwise, so interval_hull returns these instead.
  const Vector* source_lower() const { return source_lower_.size() ? &source_lower_ : nullptr; }
  const Vector* source_upper() const { return source_upper_.size() ? &source_upper_ : nullptr; }

 private:
  Vector center_;
  Matrix generators_;
  Vector source_lower_, source_upper_;
};

/// Axis-aligned box. Bounds may be infinite; an inverted interval marks the
/// box as empty.
class Box {
 public:
  Box() = default;
  Box(Vector lower, Vector upper);

  static Box empty(Eigen::Index n);
  static Box symmetric(const Vector& radius);

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Eigen::Index dim() const { return lower_.size(); }
  bool is_empty() const { return empty_; }
  bool contains(const Vector& x, double tol = 0.0) const;

 private:
  Vector lower_;
  Vector upper_;
  bool empty_ = false;
};

/// Halfspace polytope { x : H x <= b }.
struct HPolytope {
  Matrix normals;
  Vector offsets;

  HPolytope() = default;
  HPolytope(Matrix h, Vector b);
  Eigen::Index dim() const { return normals.cols(); }
};

/// Convex hull of a finite vertex set; one vertex per column.
class VPolytope {
 public:
  VPolytope() = default;
  explicit VPolytope(Matrix vertices);

  const Matrix& vertices() const { return vertices_; }
  Eigen::Index dim() const { return vertices_.rows(); }
  Eigen::Index num_vertices() const { return vertices_.cols(); }

  /// Set when the hull was computed in a lower-dimensional affine subspace.
  bool degenerate() const { return degenerate_; }
  void set_degenerate(bool d) { degenerate_ = d; }

 private:
  Matrix vertices_;
  bool degenerate_ = false;
};

// ---- zonotope calculus ----------------------------------------------------

Zonotope linear_image(const Matrix& m, const Zonotope& z);
Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b);
Zonotope scale(double s, const Zonotope& z);
double support(const Zonotope& z, const Vector& d);
Box interval_hull(const Zonotope& z);
Vector hull_radius(const Zonotope& z);

/// Exact Minkowski difference X (-) Z of a box by a zonotope.
Box box_erode_zonotope(const Box& x, const Zonotope& z);

/// Outer approximation with at most p_max generators. The smallest generators
/// (by 1-norm minus inf-norm) are replaced by their interval hull.
Zonotope reduce_generators(const Zonotope& z, Eigen::Index p_max);

/// Drops all-zero generator columns.
Zonotope compact(const Zonotope& z);

/// Zonotope enclosing the union of `parts`. Parts with matching generator
/// counts share a mean generator matrix; the per-member residuals are boxed.
Zonotope enclose_union(const std::vector<Zonotope>& parts);

/// Exact point membership (small LP).
bool contains_point(const Zonotope& z, const Vector& x, double tol = 1e-9);

// ---- support-function comparisons -----------------------------------------

/// The 2n axis directions followed by `random_count` fixed pseudo-random unit
/// directions (deterministic across runs).
const Matrix& test_directions(Eigen::Index n, int random_count = 64);

/// support(inner, d) <= support(outer, d) + tol on every test direction.
bool support_contained(const Zonotope& inner, const Zonotope& outer, double tol = 1e-9);
bool support_equal(const Zonotope& a, const Zonotope& b, double tol = 1e-9);

// ---- vertex polytopes (baseline) ------------------------------------------

double support(const VPolytope& p, const Vector& d);
VPolytope poly_linear_image(const Matrix& m, const VPolytope& p);
VPolytope poly_minkowski_sum(const VPolytope& a, const VPolytope& b);
VPolytope vertices_of(const Box& box);
VPolytope vertices_of(const Zonotope& z);

/// Extreme points of a finite point set (one point per column). Duplicates
/// are merged; lower-dimensional inputs are handled in their affine hull and
/// flagged degenerate.
VPolytope convex_hull(const Matrix& points, double tol = 1e-9);

bool hpoly_contains(const HPolytope& p, const Vector& x, double tol = 0.0);

}  // namespace zonotube
