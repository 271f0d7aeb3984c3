#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pose6d/pose_codec.hpp"
#include "pose6d/random.hpp"

using namespace pose6d;

namespace {

// Box of arbitrary size whose center is the projection of the pose's origin.
BBox centered_bbox(const Pose& pose, const Intrinsics& k, double w = 40, double h = 30) {
  const Vec2 c = project_point(pose.translation, k);
  return {c.x - w / 2, c.y - h / 2, c.x + w / 2, c.y + h / 2};
}

}  // namespace

TEST_CASE("encode_pose keeps rotation vector and t_z only") {
  Pose p;
  p.translation = {0.1, -0.2, 1.0};
  const PoseCode code = encode_pose(p);
  CHECK(norm(code.r) == 0.0);
  CHECK(code.t_z == 1.0);
}

TEST_CASE("encode_pose round-trips the rotation vector") {
  Pose p;
  p.rotation = exp_map({0.3, 0, 0});
  p.translation = {0, 0, 0.8};
  const PoseCode code = encode_pose(p);
  CHECK(norm(code.r - Vec3{0.3, 0, 0}) < 1e-10);
  CHECK(code.t_z == 0.8);
}

TEST_CASE("poses differing only in t_x, t_y encode identically") {
  SplitMix64 rng(31);
  for (int i = 0; i < 50; ++i) {
    Pose a{oracles::random_rotation(rng), {rng.uniform(-1, 1), rng.uniform(-1, 1), 1.3}};
    Pose b = a;
    b.translation.x += rng.uniform(-1, 1);
    b.translation.y += rng.uniform(-1, 1);
    const PoseCode ca = encode_pose(a), cb = encode_pose(b);
    CHECK(norm(ca.r - cb.r) == 0.0);
    CHECK(ca.t_z == cb.t_z);
  }
}

TEST_CASE("encode_pose rejects non-positive depth") {
  Pose p;
  p.translation = {0, 0, -1};
  CHECK_THROWS_AS(encode_pose(p), std::invalid_argument);
}

TEST_CASE("recover_translation at the principal point is zero") {
  const Intrinsics k{500, 500, 320, 240};
  const BBox box{300, 230, 340, 250};  // centered at (320, 240)
  const Vec3 t = recover_translation(box, 1.7, k);
  CHECK(t.x == 0.0);
  CHECK(t.y == 0.0);
  CHECK(t.z == 1.7);
}

TEST_CASE("recover_translation hand-evaluated case") {
  const Intrinsics k{500, 500, 320, 240};
  const BBox box{400, 220, 440, 260};  // center (420, 240)
  const Vec3 t = recover_translation(box, 1.0, k);
  CHECK(t.x == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(t.y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("recover_translation inverts the projection of the object center") {
  const Intrinsics k{572.4, 573.6, 325.3, 242.0};  // cx != cy guards the v equation
  SplitMix64 rng(32);
  for (int i = 0; i < 200; ++i) {
    Pose p{oracles::random_rotation(rng),
           {rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 2.0)}};
    const Vec3 t = recover_translation(centered_bbox(p, k), p.translation.z, k);
    CHECK(norm(t - p.translation) < 1e-9);
  }
}

TEST_CASE("recover_translation is homogeneous in t_z for a fixed box") {
  const Intrinsics k{500, 480, 320, 240};
  const BBox box{100, 80, 180, 140};
  const Vec3 t1 = recover_translation(box, 1.0, k);
  const Vec3 t3 = recover_translation(box, 3.0, k);
  CHECK(std::abs(t3.x - 3.0 * t1.x) < 1e-12);
  CHECK(std::abs(t3.y - 3.0 * t1.y) < 1e-12);
}

TEST_CASE("decode_pose trivial case") {
  const Intrinsics k{500, 500, 320, 240};
  const BBox box{310, 235, 330, 245};
  const Pose p = decode_pose({{0, 0, 0}, 1.0}, box, k);
  CHECK(frobenius_distance(p.rotation, Mat3::identity()) == 0.0);
  CHECK(norm(p.translation - Vec3{0, 0, 1}) == 0.0);
}

TEST_CASE("decode inverts encode under the centering assumption") {
  const Intrinsics k{572.4, 573.6, 325.3, 242.0};
  SplitMix64 rng(33);
  for (int i = 0; i < 200; ++i) {
    Pose p{oracles::random_rotation(rng),
           {rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 2.0)}};
    const Pose q = decode_pose(encode_pose(p), centered_bbox(p, k), k);
    CHECK(frobenius_distance(q.rotation, p.rotation) < 1e-9);
    CHECK(norm(q.translation - p.translation) < 1e-9);
  }
}

TEST_CASE("shifting the box right moves t_x linearly") {
  const Intrinsics k{500, 500, 320, 240};
  const PoseCode code{{0.2, -0.1, 0.05}, 1.4};
  const BBox box{100, 100, 160, 150};
  const double du = 25.0;
  const BBox shifted{box.x_min + du, box.y_min, box.x_max + du, box.y_max};
  const Pose a = decode_pose(code, box, k);
  const Pose b = decode_pose(code, shifted, k);
  CHECK(std::abs((b.translation.x - a.translation.x) - du * code.t_z / k.fx) < 1e-12);
  CHECK(b.translation.y == a.translation.y);
}
