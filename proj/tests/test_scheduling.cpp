#include "zonotube/scheduling.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace zonotube;
using json = nlohmann::json;

namespace {

std::string reference_gains_path() { return std::string(ZONOTUBE_SOURCE_DIR) + "/data/reference_gains.json"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

GainSchedule distinct_gains() {
  GainSchedule g;
  for (int i = 0; i < kNumVertices; ++i) g.k[static_cast<size_t>(i)] = Matrix25::Constant(static_cast<double>(i));
  return g;
}

}  // namespace

TEST_SUITE("scheduling") {

TEST_CASE("membership weights") {
  const SchedulingBounds b;
  auto w = membership_weights(b.lower, b);
  CHECK(w[0] == 1.0);
  for (int i = 1; i < kNumVertices; ++i) CHECK(w[static_cast<size_t>(i)] == 0.0);

  w = membership_weights(0.5 * (b.lower + b.upper), b);
  for (double v : w) CHECK(v == doctest::Approx(0.125).epsilon(1e-15));

  std::mt19937_64 rng(43);
  double worst_sum = 0.0, worst_rec = 0.0, min_w = 1.0;
  for (int t = 0; t < 10000; ++t) {
    Scheduling z;
    for (int j = 0; j < 3; ++j)
      z(j) = std::uniform_real_distribution<double>(b.lower(j), b.upper(j))(rng);
    w = membership_weights(z, b);
    double s = 0.0;
    Scheduling rec = Scheduling::Zero();
    for (int i = 0; i < kNumVertices; ++i) {
      s += w[static_cast<size_t>(i)];
      rec += w[static_cast<size_t>(i)] * b.vertex(i);
      min_w = std::min(min_w, w[static_cast<size_t>(i)]);
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    worst_rec = std::max(worst_rec, (rec - z).cwiseAbs().maxCoeff());
  }
  CHECK(worst_sum < 1e-12);
  CHECK(worst_rec < 1e-12);
  CHECK(min_w >= -1e-15);
}

TEST_CASE("vertex order and clamping") {
  const SchedulingBounds b;
  CHECK(b.vertex(0) == b.lower);
  CHECK(b.vertex(7) == b.upper);
  CHECK(b.vertex(1)(0) == b.upper(0));
  CHECK(b.vertex(1)(1) == b.lower(1));
  CHECK(b.vertex(4)(2) == b.upper(2));

  Scheduling slightly = b.upper;
  slightly(0) += 0.005 * (b.upper(0) - b.lower(0));
  auto w = membership_weights(slightly, b);
  CHECK(w[7] == doctest::Approx(1.0));

  Scheduling far = b.upper;
  far(0) += 5.0;
  CHECK_THROWS_AS(membership_weights(far, b), std::domain_error);
}

TEST_CASE("gain interpolation") {
  const GainSchedule g = distinct_gains();
  std::array<double, kNumVertices> w{};
  w[3] = 1.0;
  CHECK(interpolate_gain(w, g) == g.k[3]);

  GainSchedule same;
  Matrix25 k;
  k << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  same.k.fill(k);
  w.fill(0.125);
  CHECK(interpolate_gain(w, same).isApprox(k, 1e-15));

  std::array<double, kNumVertices> w1{}, w2{}, mix{};
  w1.fill(0.0);
  w1[1] = 0.3;
  w1[6] = 0.7;
  w2.fill(0.125);
  const double lam = 0.35;
  for (size_t i = 0; i < w.size(); ++i) mix[i] = lam * w1[i] + (1 - lam) * w2[i];
  CHECK(interpolate_gain(mix, g).isApprox(lam * interpolate_gain(w1, g) + (1 - lam) * interpolate_gain(w2, g), 1e-14));

  CHECK_THROWS(interpolate_gain(std::vector<double>(7, 1.0 / 7), g));
}

TEST_CASE("local control law") {
  Matrix25 k;
  k << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  CHECK(local_control(State::Zero(), k).isZero());
  CHECK(local_control(State::Ones(), Matrix25::Zero()).isZero());
  for (int j = 0; j < 5; ++j) CHECK(local_control(State::Unit(j), k) == k.col(j));
}

TEST_CASE("gains file") {
  const GainSchedule gs = load_gains(reference_gains_path());
  CHECK(gs.k_lqr.has_value());
  CHECK(gs.terminal.has_value());
  CHECK(gs.design.substeps == 7);

  // Round trip is bitwise.
  const GainSchedule back = parse_gains(serialize_gains(gs));
  for (int i = 0; i < kNumVertices; ++i) {
    CHECK(back.k[static_cast<size_t>(i)] == gs.k[static_cast<size_t>(i)]);
    CHECK((*back.k_lqr)[static_cast<size_t>(i)] == (*gs.k_lqr)[static_cast<size_t>(i)]);
  }
  CHECK(back.p == gs.p);
  CHECK(back.terminal->set.generators() == gs.terminal->set.generators());
  CHECK(back.gamma == gs.gamma);

  json doc = json::parse(read_file(reference_gains_path()));
  {
    json bad = doc;
    bad["K"].erase(bad["K"].begin());
    CHECK_THROWS_WITH_AS(parse_gains(bad.dump()), doctest::Contains("expected 8"), std::runtime_error);
  }
  {
    json bad = doc;
    std::vector<std::vector<double>> p(5, std::vector<double>(5, 0.0));
    for (int i = 0; i < 5; ++i) p[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
    p[4][4] = -1e-8;
    bad["P"] = p;
    CHECK_THROWS_WITH_AS(parse_gains(bad.dump()), doctest::Contains("positive definite"), std::runtime_error);
  }
  {
    json bad = doc;
    bad.erase("P");
    CHECK_THROWS_WITH_AS(parse_gains(bad.dump()), doctest::Contains("missing field"), std::runtime_error);
  }
  CHECK_THROWS_WITH_AS(load_gains("/no/such/gains.json"), doctest::Contains("/no/such/gains.json"),
                       std::runtime_error);
}

TEST_CASE("gain at a scheduling point") {
  const GainSchedule gs = load_gains(reference_gains_path());
  CHECK(gain_at(gs.bounds.vertex(5), gs).isApprox(gs.k[5], 1e-14));
  const GainSchedule lqr = gs.with_lqr_gains();
  CHECK(lqr.k[2] == (*gs.k_lqr)[2]);
}

}  // TEST_SUITE
