#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pose6d/geometry.hpp"
#include "pose6d/random.hpp"

using namespace pose6d;

TEST_CASE("hat of zero is the zero matrix") {
  const Mat3 s = hat({0, 0, 0});
  CHECK(frobenius_norm(s) == 0.0);
}

TEST_CASE("hat of unit z is the cross-product matrix") {
  const Mat3 s = hat({0, 0, 1});
  CHECK(s.m[0][1] == -1.0);
  CHECK(s.m[1][0] == 1.0);
  CHECK(s.m[0][0] == 0.0);
  CHECK(s.m[2][2] == 0.0);
  CHECK(s.m[0][2] == 0.0);
  CHECK(s.m[2][0] == 0.0);
}

TEST_CASE("hat(r) * r vanishes and hat is antisymmetric") {
  SplitMix64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec3 r = rng.gaussian3(2.0);
    const Mat3 s = hat(r);
    CHECK(norm(s * r) < 1e-14);
    CHECK(frobenius_norm(s + transpose(s)) == 0.0);
    const Vec3 v = rng.gaussian3(1.0);
    CHECK(norm(s * v - cross(r, v)) < 1e-15);
  }
}

TEST_CASE("exp_map of zero is identity") {
  CHECK(frobenius_distance(exp_map({0, 0, 0}), Mat3::identity()) == 0.0);
}

TEST_CASE("exp_map of a quarter turn about x") {
  const Mat3 r = exp_map({kPi / 2, 0, 0});
  Mat3 expected;
  expected.m[0][0] = 1;
  expected.m[1][2] = -1;
  expected.m[2][1] = 1;
  CHECK(frobenius_distance(r, expected) < 1e-15);
}

TEST_CASE("exp_map matches the truncated matrix-exponential series") {
  SplitMix64 rng(12);
  for (int i = 0; i < 200; ++i) {
    Vec3 r = rng.gaussian3(1.0);
    const double n = norm(r);
    if (n > 0) r = r * (0.3 / n);  // fixed norm 0.3 exercises the closed form
    CHECK(frobenius_distance(exp_map(r), oracles::matrix_exp_series(r)) < 1e-12);
  }
}

TEST_CASE("exp_map series branch agrees with the oracle near zero") {
  SplitMix64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 r = rng.in_ball(5e-5);
    CHECK(frobenius_distance(exp_map(r), oracles::matrix_exp_series(r)) < 1e-15);
  }
}

TEST_CASE("exp_map output satisfies the rotation invariants") {
  SplitMix64 rng(14);
  for (int i = 0; i < 500; ++i) {
    const Mat3 r = exp_map(rng.in_ball(kPi));
    CHECK(frobenius_distance(transpose(r) * r, Mat3::identity()) < 1e-12);
    CHECK(std::abs(det(r) - 1.0) < 1e-12);
  }
}

TEST_CASE("log_map of identity is zero") {
  CHECK(norm(log_map(Mat3::identity())) == 0.0);
}

TEST_CASE("log_map round-trips exp_map") {
  const Vec3 r = {0.1, -0.2, 0.3};
  CHECK(norm(log_map(exp_map(r)) - r) < 1e-10);
}

TEST_CASE("log then exp reproduces the rotation for random inputs") {
  SplitMix64 rng(15);
  for (int i = 0; i < 500; ++i) {
    const Mat3 r = exp_map(rng.in_ball(kPi));
    CHECK(frobenius_distance(exp_map(log_map(r)), r) < 1e-9);
  }
}

TEST_CASE("log_map at the pi boundary recovers the half-turn axis") {
  Mat3 r;
  r.m[0][0] = 1;
  r.m[1][1] = -1;
  r.m[2][2] = -1;
  const Vec3 v = log_map(r);
  CHECK(std::abs(norm(v) - kPi) < 1e-12);
  CHECK(std::abs(std::abs(v.x) - kPi) < 1e-12);
  CHECK(std::abs(v.y) < 1e-9);
  CHECK(std::abs(v.z) < 1e-9);
}

TEST_CASE("log_map round trip near pi keeps the full tolerance") {
  SplitMix64 rng(16);
  for (int i = 0; i < 200; ++i) {
    Vec3 axis = rng.gaussian3(1.0);
    axis = axis * (1.0 / norm(axis));
    const double theta = kPi - 1e-3 * rng.next_double();
    const Vec3 r = axis * theta;
    const Mat3 m = exp_map(r);
    CHECK(frobenius_distance(exp_map(log_map(m)), m) < 1e-9);
  }
}

TEST_CASE("log_map rejects a non-orthonormal matrix") {
  Mat3 bad = Mat3::identity();
  bad.m[0][1] = 1e-3;
  CHECK_THROWS_AS(log_map(bad), std::invalid_argument);
}

TEST_CASE("log_map result stays in the canonical range") {
  SplitMix64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const Vec3 r = rng.in_ball(3.0 * kPi);  // deliberately out of range
    CHECK(norm(log_map(exp_map(r))) <= kPi + 1e-12);
  }
}

TEST_CASE("angular_distance basics") {
  SplitMix64 rng(18);
  const Mat3 r = oracles::random_rotation(rng);
  CHECK(angular_distance(r, r) == 0.0);
  CHECK(std::abs(angular_distance(Mat3::identity(), exp_map({0.5, 0, 0})) - 0.5) < 1e-12);
}

TEST_CASE("angular_distance matches the log-map norm") {
  SplitMix64 rng(19);
  for (int i = 0; i < 300; ++i) {
    const Mat3 a = oracles::random_rotation(rng);
    const Mat3 b = oracles::random_rotation(rng);
    CHECK(std::abs(angular_distance(a, b) - norm(log_map(a * transpose(b)))) < 1e-9);
  }
}

TEST_CASE("angular_distance is symmetric and satisfies the triangle inequality") {
  SplitMix64 rng(20);
  for (int i = 0; i < 200; ++i) {
    const Mat3 a = oracles::random_rotation(rng);
    const Mat3 b = oracles::random_rotation(rng);
    const Mat3 c = oracles::random_rotation(rng);
    CHECK(std::abs(angular_distance(a, b) - angular_distance(b, a)) < 1e-9);
    CHECK(angular_distance(a, c) <= angular_distance(a, b) + angular_distance(b, c) + 1e-9);
  }
}

TEST_CASE("transform_points identity and pure translation") {
  const std::vector<Vec3> pts = {{0, 0, 0}, {1, 2, 3}};
  const std::vector<Vec3> same = transform_points(Pose{}, pts);
  CHECK(norm(same[0] - pts[0]) == 0.0);
  CHECK(norm(same[1] - pts[1]) == 0.0);

  Pose shift;
  shift.translation = {0, 0, 1};
  CHECK(norm(transform_points(shift, {{0, 0, 0}})[0] - Vec3{0, 0, 1}) == 0.0);
}

TEST_CASE("transform composition matches composed pose") {
  SplitMix64 rng(21);
  for (int i = 0; i < 100; ++i) {
    Pose p1{oracles::random_rotation(rng), rng.gaussian3(1.0)};
    Pose p2{oracles::random_rotation(rng), rng.gaussian3(1.0)};
    const Vec3 x = rng.gaussian3(1.0);
    const Vec3 a = transform_point(p2, transform_point(p1, x));
    const Vec3 b = transform_point(compose(p2, p1), x);
    CHECK(norm(a - b) < 1e-12);
  }
}

TEST_CASE("rigid transforms preserve pairwise distances") {
  SplitMix64 rng(22);
  for (int i = 0; i < 50; ++i) {
    const Pose p{oracles::random_rotation(rng), rng.gaussian3(2.0)};
    const Vec3 a = rng.gaussian3(1.0), b = rng.gaussian3(1.0);
    CHECK(std::abs(norm(transform_point(p, a) - transform_point(p, b)) - norm(a - b)) < 1e-9);
  }
}

TEST_CASE("project_point maps the optical axis to the principal point") {
  const Intrinsics k{500, 500, 320, 240};
  const Vec2 uv = project_point({0, 0, 1}, k);
  CHECK(uv.x == 320.0);
  CHECK(uv.y == 240.0);
}

TEST_CASE("project_point hand-evaluated case") {
  const Intrinsics k{500, 500, 320, 240};
  const Vec2 uv = project_point({0.2, 0, 1}, k);
  CHECK(uv.x == doctest::Approx(420.0).epsilon(1e-12));
  CHECK(uv.y == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("projection is invariant along the viewing ray") {
  const Intrinsics k{450, 520, 310, 250};
  SplitMix64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 3.0)};
    const double s = rng.uniform(0.1, 5.0);
    const Vec2 a = project_point(p, k);
    const Vec2 b = project_point(p * s, k);
    CHECK(std::abs(a.x - b.x) < 1e-9);
    CHECK(std::abs(a.y - b.y) < 1e-9);
  }
}

TEST_CASE("project_points rejects points behind the camera") {
  const Intrinsics k{500, 500, 320, 240};
  CHECK_THROWS_AS(project_points({{0, 0, -1}}, k), std::invalid_argument);
  CHECK_THROWS_AS(project_points({{0, 0, 0}}, k), std::invalid_argument);
}

TEST_CASE("nearest_rotation projects a perturbed rotation back to SO(3)") {
  SplitMix64 rng(24);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = oracles::random_rotation(rng);
    Mat3 noisy = r;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) noisy.m[a][b] += rng.uniform(-1e-3, 1e-3);
    const Mat3 fixed = nearest_rotation(noisy);
    CHECK(is_rotation(fixed, 1e-9));
    CHECK(frobenius_distance(fixed, r) < 1e-2);
  }
}
