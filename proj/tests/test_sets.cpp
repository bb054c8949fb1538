#include "oracles.hpp"
#include "zonotube/sets.hpp"

#include <doctest.h>

using namespace zonotube;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("sets") {

TEST_CASE("linear image") {
  const Zonotope z(Vector::Zero(2), diag2(0.1, 0.2));
  const Zonotope id = linear_image(Matrix::Identity(2, 2), z);
  CHECK(id.center() == z.center());
  CHECK(id.generators() == z.generators());

  const Zonotope pt = Zonotope::point(vec2(1.0, -2.0));
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Zonotope img = linear_image(m, pt);
  CHECK(img.num_generators() == 0);
  CHECK(img.center().isApprox(m * pt.center()));

  const Zonotope twice = linear_image(2.0 * Matrix::Identity(2, 2), z);
  CHECK(twice.generators().isApprox(diag2(0.2, 0.4)));
  CHECK(twice.center().isZero());

  // Composition: (MN)Z == M(NZ).
  std::mt19937_64 rng(3);
  const Zonotope r = oracle::random_zonotope(rng, 3, 6);
  const Matrix a = oracle::random_matrix(rng, 3, 3), b = oracle::random_matrix(rng, 3, 3);
  CHECK(support_equal(linear_image(a * b, r), linear_image(a, linear_image(b, r)), 1e-12));
}

TEST_CASE("minkowski sum") {
  const Zonotope a(Vector::Zero(2), diag2(0.1, 0.1)), b(Vector::Zero(2), diag2(0.2, 0.2));
  const Zonotope s = minkowski_sum(a, b);
  REQUIRE(s.num_generators() == 4);
  CHECK(s.generators().leftCols(2) == a.generators());
  CHECK(s.generators().rightCols(2) == b.generators());
  const Box h = interval_hull(s);
  CHECK(h.lower().isApprox(vec2(-0.3, -0.3)));
  CHECK(h.upper().isApprox(vec2(0.3, 0.3)));

  const Zonotope same = minkowski_sum(a, Zonotope::origin(2));
  CHECK(support_equal(same, a, 0.0));

  std::mt19937_64 rng(11);
  const Zonotope z1 = oracle::random_zonotope(rng, 4, 5), z2 = oracle::random_zonotope(rng, 4, 7);
  const Zonotope sum = minkowski_sum(z1, z2);
  for (int i = 0; i < 100; ++i) {
    const Vector d = oracle::random_unit(rng, 4);
    CHECK(support(sum, d) ==
          doctest::Approx(oracle::support_closed(z1, d) + oracle::support_closed(z2, d)).epsilon(1e-12));
  }
}

TEST_CASE("support function") {
  const Zonotope z(Vector::Zero(2), diag2(0.2, 0.1));
  CHECK(support(z, vec2(1, 0)) == doctest::Approx(0.2));
  const Zonotope shifted(vec2(1, 0), diag2(0.2, 0.1));
  CHECK(support(shifted, vec2(1, 0)) == doctest::Approx(1.2));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Zonotope r = oracle::random_zonotope(rng, 2, 1 + trial % 10);
    const Vector d = oracle::random_unit(rng, 2);
    CHECK(support(r, d) == doctest::Approx(oracle::support_bruteforce(r, d)).epsilon(1e-12));
  }
}

TEST_CASE("interval hull") {
  Matrix g(2, 2);
  g << 0.1, 0.2, 0.0, 0.1;
  const Box h = interval_hull(Zonotope(Vector::Zero(2), g));
  CHECK(h.lower().isApprox(vec2(-0.3, -0.1)));
  CHECK(h.upper().isApprox(vec2(0.3, 0.1)));

  const Box p = interval_hull(Zonotope::point(vec2(1, 2)));
  CHECK(p.lower() == vec2(1, 2));
  CHECK(p.upper() == vec2(1, 2));

  std::mt19937_64 rng(7);
  const Zonotope z = oracle::random_zonotope(rng, 3, 8);
  const Box hz = interval_hull(z);
  for (int i = 0; i < 1000; ++i) CHECK(hz.contains(oracle::sample_point(rng, z), 1e-12));

  // Box -> zonotope -> box is bitwise.
  for (int i = 0; i < 1000; ++i) {
    const Vector c = oracle::random_matrix(rng, 3, 1, 10.0), r = oracle::random_matrix(rng, 3, 1).cwiseAbs();
    const Box b(c - r, c + r);
    const Zonotope bz = Zonotope::from_box(b);
    CHECK(interval_hull(bz).lower() == b.lower());
    CHECK(interval_hull(bz).upper() == b.upper());
    CHECK(support(bz, Vector::Unit(3, 1)) == doctest::Approx(b.upper()(1)).epsilon(1e-15));
  }
}

TEST_CASE("box erosion") {
  const Box x(vec2(-1, -1), vec2(1, 1));
  const Box e = box_erode_zonotope(x, Zonotope(Vector::Zero(2), diag2(0.2, 0.1)));
  CHECK(e.lower().isApprox(vec2(-0.8, -0.9)));
  CHECK(e.upper().isApprox(vec2(0.8, 0.9)));

  const Box same = box_erode_zonotope(x, Zonotope::origin(2));
  CHECK(same.lower() == x.lower());
  CHECK(same.upper() == x.upper());

  // Soundness: x~ in the eroded box plus any z in Z lies in X.
  std::mt19937_64 rng(13);
  const Zonotope z = Zonotope(Vector::Zero(2), 0.2 * oracle::random_matrix(rng, 2, 4));
  const Box t = box_erode_zonotope(x, z);
  REQUIRE_FALSE(t.is_empty());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Vector p(2);
    for (int k = 0; k < 2; ++k) p(k) = t.lower()(k) + u(rng) * (t.upper()(k) - t.lower()(k));
    CHECK(x.contains(p + oracle::sample_point(rng, z), 1e-12));
  }

  // Too large a zonotope empties the box.
  CHECK(box_erode_zonotope(x, Zonotope(Vector::Zero(2), diag2(2.0, 0.1))).is_empty());

  // Infinite bounds stay infinite.
  const Box half(vec2(-1, -INFINITY), vec2(1, INFINITY));
  const Box he = box_erode_zonotope(half, Zonotope(Vector::Zero(2), diag2(0.5, 0.5)));
  CHECK(std::isinf(he.upper()(1)));
}

TEST_CASE("generator reduction") {
  std::mt19937_64 rng(17);
  const Zonotope small = oracle::random_zonotope(rng, 3, 4);
  const Zonotope kept = reduce_generators(small, 10);
  CHECK(kept.generators() == small.generators());

  const Zonotope box(Vector::Zero(3), Matrix(Vector::Constant(3, 0.5).asDiagonal()));
  CHECK(support_equal(reduce_generators(box, 3), box, 1e-15));

  for (int trial = 0; trial < 20; ++trial) {
    const Zonotope z = oracle::random_zonotope(rng, 5, 40);
    const Zonotope r = reduce_generators(z, 25);
    CHECK(r.num_generators() <= 25);
    for (int i = 0; i < 100; ++i) {
      const Vector d = oracle::random_unit(rng, 5);
      CHECK(oracle::support_closed(r, d) >= oracle::support_closed(z, d) - 1e-12);
    }
  }
}

TEST_CASE("point membership") {
  std::mt19937_64 rng(19);
  const Zonotope z = oracle::random_zonotope(rng, 3, 6);
  for (int i = 0; i < 100; ++i) CHECK(contains_point(z, oracle::sample_point(rng, z), 1e-8));
  // A point beyond the support in some direction is outside.
  const Vector d = oracle::random_unit(rng, 3);
  const double h = oracle::support_closed(z, d);
  CHECK_FALSE(contains_point(z, z.center() + d * (h - d.dot(z.center()) + 0.01)));
}

TEST_CASE("union enclosure") {
  std::mt19937_64 rng(23);
  std::vector<Zonotope> parts;
  for (int i = 0; i < 3; ++i) parts.push_back(oracle::random_zonotope(rng, 2, 4));
  const Zonotope u = enclose_union(parts);
  for (const auto& p : parts)
    for (int i = 0; i < 300; ++i) CHECK(contains_point(u, oracle::sample_point(rng, p), 1e-8));
}

TEST_CASE("vertex polytopes") {
  Matrix seg1(2, 2), seg2(2, 2);
  seg1 << -1, 1, 0, 0;
  seg2 << 0, 0, -1, 1;
  const VPolytope rect = poly_minkowski_sum(VPolytope(seg1), VPolytope(seg2));
  CHECK(rect.num_vertices() == 4);

  const VPolytope square = convex_hull((Matrix(2, 5) << 0, 1, 0, 1, 0.5, 0, 0, 1, 1, 0.5).finished());
  CHECK(square.num_vertices() == 4);

  const VPolytope plus0 = poly_minkowski_sum(square, VPolytope(Matrix::Zero(2, 1)));
  CHECK(plus0.num_vertices() == 4);

  const VPolytope zero = poly_linear_image(Matrix::Zero(2, 2), square);
  CHECK(zero.num_vertices() == 1);
  CHECK(zero.vertices().col(0).isZero());

  std::mt19937_64 rng(29);
  const Zonotope a = oracle::random_zonotope(rng, 3, 3), b = oracle::random_zonotope(rng, 3, 4);
  const VPolytope pa = vertices_of(a), pb = vertices_of(b);
  const VPolytope ps = poly_minkowski_sum(pa, pb);
  const Zonotope zs = minkowski_sum(a, b);
  for (int i = 0; i < 100; ++i) {
    const Vector d = oracle::random_unit(rng, 3);
    CHECK(support(ps, d) == doctest::Approx(oracle::support_closed(zs, d)).epsilon(1e-10));
  }
}

TEST_CASE("scheduling region halfspace check") {
  // Five-variable scheduling polytope of the design example.
  Matrix h = Matrix::Zero(10, 5);
  for (int i = 0; i < 5; ++i) {
    h(2 * i, i) = 1.0;
    h(2 * i + 1, i) = -1.0;
  }
  Vector b(10);
  b << 10, -0.5, 0.6, 0.6, 1.0, 1.0, 1000.0, 0.0, 3.14, 3.14;
  const HPolytope theta(h, b);
  Vector z(5);
  z << 5, 0, 0, 500, 0;
  CHECK(hpoly_contains(theta, z));
  z(0) = 0.4;  // below the speed floor
  CHECK_FALSE(hpoly_contains(theta, z));
}

}  // TEST_SUITE
