#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pose6d/metrics.hpp"
#include "pose6d/random.hpp"
#include "pose6d/synthetic.hpp"

using namespace pose6d;

namespace {

ObjectModel unit_cube_corners() {
  ObjectModel m;
  for (int sx = 0; sx <= 1; ++sx)
    for (int sy = 0; sy <= 1; ++sy)
      for (int sz = 0; sz <= 1; ++sz)
        m.points.push_back({sx - 0.5, sy - 0.5, sz - 0.5});
  m.diameter = model_diameter(m.points);
  return m;
}

Pose facing_pose(SplitMix64& rng, double max_angle = 0.6) {
  Pose p;
  p.rotation = exp_map(rng.in_ball(max_angle));
  p.translation = {rng.uniform(-0.2, 0.2), rng.uniform(-0.15, 0.15), rng.uniform(2.0, 4.0)};
  return p;
}

const Intrinsics kCam{500, 500, 320, 240};

}  // namespace

TEST_CASE("model_diameter basics") {
  CHECK(model_diameter({{0, 0, 0}, {1, 0, 0}}) == 1.0);
  const ObjectModel cube = unit_cube_corners();
  CHECK(cube.diameter == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("model_diameter matches the brute-force maximum on random clouds") {
  SplitMix64 rng(61);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(rng.gaussian3(0.3));
  CHECK(model_diameter(pts) == doctest::Approx(oracles::diameter_reference(pts)).epsilon(1e-15));
}

TEST_CASE("model_diameter needs two points") {
  CHECK_THROWS_AS(model_diameter({{0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("pose_2d accepts a perfect estimate with IoU 1") {
  SplitMix64 rng(62);
  const ObjectModel m = make_model(ShapeKind::box, 64, 1);
  const Pose p = facing_pose(rng);
  const Pose2dResult r = pose_2d_metric(m, p, p, kCam);
  CHECK(r.iou == 1.0);
  CHECK(r.accepted);
}

TEST_CASE("pose_2d rejects a far-shifted estimate with IoU 0") {
  SplitMix64 rng(63);
  const ObjectModel m = make_model(ShapeKind::box, 64, 1);
  const Pose gt = facing_pose(rng);
  Pose est = gt;
  est.translation.x += 2.0;
  const Pose2dResult r = pose_2d_metric(m, gt, est, kCam);
  CHECK(r.iou == 0.0);
  CHECK(!r.accepted);
}

TEST_CASE("pose_2d iou equals an independent projected-box overlap") {
  SplitMix64 rng(64);
  const ObjectModel m = make_model(ShapeKind::asymmetric_blob, 300, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose gt = facing_pose(rng);
    Pose est = gt;
    est.translation.x += rng.uniform(-0.05, 0.05);
    est.translation.y += rng.uniform(-0.03, 0.03);

    // independent oracle: project both clouds by hand, box them, overlap them
    const auto project_box = [&](const Pose& pose) {
      double lo_u = 1e30, lo_v = 1e30, hi_u = -1e30, hi_v = -1e30;
      for (const Vec3& p : m.points) {
        double q[3];
        const double in[3] = {p.x, p.y, p.z};
        for (int i = 0; i < 3; ++i)
          q[i] = pose.rotation.m[i][0] * in[0] + pose.rotation.m[i][1] * in[1] +
                 pose.rotation.m[i][2] * in[2];
        q[0] += pose.translation.x;
        q[1] += pose.translation.y;
        q[2] += pose.translation.z;
        const double u = kCam.fx * q[0] / q[2] + kCam.cx;
        const double v = kCam.fy * q[1] / q[2] + kCam.cy;
        lo_u = std::min(lo_u, u);
        hi_u = std::max(hi_u, u);
        lo_v = std::min(lo_v, v);
        hi_v = std::max(hi_v, v);
      }
      return std::array<double, 4>{lo_u, lo_v, hi_u, hi_v};
    };
    const std::array<double, 4> a = project_box(gt), b = project_box(est);
    const double ix = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
    const double iy = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
    const double inter = ix * iy;
    const double uni = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    const Pose2dResult r = pose_2d_metric(m, gt, est, kCam);
    CHECK(r.iou == doctest::Approx(inter / uni).epsilon(1e-9));
  }
}

TEST_CASE("pose_2d rejects points behind the camera") {
  const ObjectModel m = unit_cube_corners();
  Pose gt;
  gt.translation = {0, 0, 0.1};  // cube straddles the camera plane
  CHECK_THROWS_AS(pose_2d_metric(m, gt, gt, kCam), std::invalid_argument);
}

TEST_CASE("5cm5deg perfect estimate") {
  SplitMix64 rng(65);
  const Pose p = facing_pose(rng);
  const Metric5cm5degResult r = metric_5cm5deg(p, p);
  CHECK(r.trans_err_m == 0.0);
  CHECK(r.ang_err_rad == 0.0);
  CHECK(r.accepted);
}

TEST_CASE("5cm5deg acceptance needs both clauses") {
  Pose gt;
  gt.translation = {0, 0, 1};
  Pose ok = gt;
  ok.translation.x += 0.04;
  ok.rotation = exp_map({4.0 * kPi / 180.0, 0, 0});
  CHECK(metric_5cm5deg(gt, ok).accepted);

  Pose bad_rot = gt;
  bad_rot.translation.x += 0.04;
  bad_rot.rotation = exp_map({6.0 * kPi / 180.0, 0, 0});
  CHECK(!metric_5cm5deg(gt, bad_rot).accepted);

  Pose bad_trans = gt;
  bad_trans.translation.x += 0.06;
  CHECK(!metric_5cm5deg(gt, bad_trans).accepted);
}

TEST_CASE("5cm5deg is inclusive at the thresholds") {
  Pose gt;
  gt.translation = {0, 0, 1};
  Pose edge = gt;
  edge.translation.x += 0.05;
  edge.rotation = exp_map({5.0 * kPi / 180.0, 0, 0});
  const Metric5cm5degResult r = metric_5cm5deg(gt, edge);
  CHECK(r.trans_err_m == doctest::Approx(0.05));
  CHECK(r.accepted);
}

TEST_CASE("add metric: perfect and pure-translation offsets") {
  SplitMix64 rng(66);
  const ObjectModel m = make_model(ShapeKind::asymmetric_blob, 200, 3);
  const Pose gt = facing_pose(rng);
  CHECK(add_metric(m, gt, gt).add_m == 0.0);
  CHECK(add_metric(m, gt, gt).accepted);

  Pose est = gt;
  est.translation = est.translation + Vec3{0.003, -0.004, 0.005};
  const double d = norm(Vec3{0.003, -0.004, 0.005});
  CHECK(add_metric(m, gt, est).add_m == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("add matches the brute-force loop on random pose pairs") {
  SplitMix64 rng(67);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(rng.gaussian3(0.05));
  ObjectModel m;
  m.points = pts;
  m.diameter = model_diameter(pts);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose a = facing_pose(rng, 2.5);
    const Pose b = facing_pose(rng, 2.5);
    CHECK(add_metric(m, a, b).add_m ==
          doctest::Approx(oracles::add_reference(pts, a, b)).epsilon(1e-12));
  }
}

TEST_CASE("add acceptance is strict at 10% of the diameter") {
  ObjectModel m;
  m.points = {{0, 0, 0}, {1, 0, 0}};
  m.diameter = 1.0;
  Pose gt;
  gt.translation = {0, 0, 5};
  Pose est = gt;
  est.translation.x += 0.1;  // add = exactly 0.1 = 10% of diameter
  const AddResult r = add_metric(m, gt, est);
  CHECK(r.add_m == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(!r.accepted);
}

TEST_CASE("add is monotone in a growing pure-translation perturbation") {
  SplitMix64 rng(68);
  const ObjectModel m = make_model(ShapeKind::cylinder, 200, 4);
  const Pose gt = facing_pose(rng);
  double prev = -1.0;
  for (int i = 0; i <= 10; ++i) {
    Pose est = gt;
    est.translation.x += 0.002 * i;
    const double v = add_metric(m, gt, est).add_m;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("all three metrics accept the exact pose") {
  SplitMix64 rng(69);
  for (int trial = 0; trial < 30; ++trial) {
    const ObjectModel m = make_model(
        trial % 2 == 0 ? ShapeKind::box : ShapeKind::asymmetric_blob, 128, 5 + trial);
    const Pose p = facing_pose(rng);
    const PoseJudgement j = judge_pose(m, p, p, kCam);
    CHECK(j.accepted_2d);
    CHECK(j.accepted_5cm5deg);
    CHECK(j.accepted_add);
  }
}

TEST_CASE("detection f1: perfect, empty, and partial predictions") {
  const std::vector<GtBox> gts = {{1, {0, 0, 10, 10}}, {1, {50, 50, 70, 70}}};
  std::vector<Detection> perfect = {{1, 0.9, {0, 0, 10, 10}}, {1, 0.8, {50, 50, 70, 70}}};
  CHECK(detection_f1(perfect, gts, 0.5) == 1.0);
  CHECK(detection_f1({}, gts, 0.5) == 0.0);
  const std::vector<Detection> one = {{1, 0.9, {0, 0, 10, 10}}};
  CHECK(detection_f1(one, gts, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("detection matching requires the class to agree") {
  const std::vector<GtBox> gts = {{1, {0, 0, 10, 10}}};
  const std::vector<Detection> wrong = {{2, 0.9, {0, 0, 10, 10}}};
  CHECK(detection_f1(wrong, gts, 0.5) == 0.0);
}

TEST_CASE("a duplicate correct prediction cannot raise F1 past one-to-one matching") {
  const std::vector<GtBox> gts = {{1, {0, 0, 10, 10}}};
  const std::vector<Detection> dup = {{1, 0.9, {0, 0, 10, 10}}, {1, 0.8, {0, 0, 10, 10}}};
  const double f1 = detection_f1(dup, gts, 0.5);
  CHECK(f1 <= 1.0);
  CHECK(f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // tp=1 fp=1 fn=0
}

TEST_CASE("segmentation f1 over identical and half-covering masks") {
  Mask gt_mask(20, 20);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) gt_mask.set(x, y, true);
  Mask half(20, 20);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 8; ++x) half.set(x, y, true);

  const std::vector<GtMaskInstance> gts = {{1, gt_mask}};
  CHECK(segmentation_f1({{1, 0.9, gt_mask}}, gts, 0.5) == 1.0);
  CHECK(segmentation_f1({{1, 0.9, gt_mask}}, gts, 0.9) == 1.0);
  CHECK(segmentation_f1({}, gts, 0.5) == 0.0);

  // half-cover: IoU = 32/64 = 0.5 -> TP at threshold 0.5, FP at 0.9
  CHECK(mask_iou(half, gt_mask) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(segmentation_f1({{1, 0.9, half}}, gts, 0.5) == 1.0);
  CHECK(segmentation_f1({{1, 0.9, half}}, gts, 0.9) == 0.0);
}

TEST_CASE("segmentation f1 rejects resolution mismatches") {
  const std::vector<GtMaskInstance> gts = {{1, Mask(8, 8)}};
  Mask wrong(9, 8);
  wrong.set(0, 0, true);
  Mask gt_on(8, 8);
  gt_on.set(0, 0, true);
  const std::vector<GtMaskInstance> gts_on = {{1, gt_on}};
  CHECK_THROWS_AS(segmentation_f1({{1, 0.9, wrong}}, gts_on, 0.5), std::invalid_argument);
}

TEST_CASE("f1 scores stay within [0, 1] on random instances") {
  SplitMix64 rng(70);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GtBox> gts;
    std::vector<Detection> preds;
    const int n_gt = 1 + static_cast<int>(rng.next_below(5));
    for (int i = 0; i < n_gt; ++i) {
      const double x = rng.uniform(0, 200), y = rng.uniform(0, 200);
      gts.push_back({static_cast<int>(rng.next_below(3)), {x, y, x + 20, y + 20}});
    }
    const int n_pred = static_cast<int>(rng.next_below(8));
    for (int i = 0; i < n_pred; ++i) {
      const double x = rng.uniform(0, 200), y = rng.uniform(0, 200);
      preds.push_back(
          {static_cast<int>(rng.next_below(3)), rng.next_double(), {x, y, x + 20, y + 20}});
    }
    const double f1 = detection_f1(preds, gts, 0.5);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
  }
}
