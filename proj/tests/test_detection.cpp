#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pose6d/detection.hpp"
#include "pose6d/random.hpp"

using namespace pose6d;

namespace {

std::vector<BBox> random_boxes(SplitMix64& rng, int n, double extent = 200) {
  std::vector<BBox> boxes;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(0, extent);
    const double y = rng.uniform(0, extent);
    const double w = rng.uniform(2, 60);
    const double h = rng.uniform(2, 60);
    boxes.push_back({x, y, x + w, y + h});
  }
  return boxes;
}

}  // namespace

TEST_CASE("a 1x1 feature map with the published config yields 15 anchors") {
  CHECK(generate_anchors(AnchorConfig{}, 1, 1).size() == 15);
}

TEST_CASE("anchor centering and sizing at cell (0,0)") {
  AnchorConfig cfg;
  cfg.scales = {32};
  cfg.ratios = {1.0};
  cfg.stride = 16;
  const std::vector<BBox> a = generate_anchors(cfg, 1, 1);
  REQUIRE(a.size() == 1);
  CHECK(a[0].center().x == doctest::Approx(8.0));
  CHECK(a[0].center().y == doctest::Approx(8.0));
  CHECK(a[0].width() == doctest::Approx(32.0));
  CHECK(a[0].height() == doctest::Approx(32.0));
}

TEST_CASE("a 2:1 anchor doubles height over width at the same area") {
  AnchorConfig cfg;
  cfg.scales = {64};
  cfg.ratios = {2.0, 1.0};
  cfg.stride = 16;
  const std::vector<BBox> a = generate_anchors(cfg, 1, 1);
  REQUIRE(a.size() == 2);
  CHECK(a[0].height() / a[0].width() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a[0].area() == doctest::Approx(64.0 * 64.0).epsilon(1e-12));
  CHECK(a[0].area() == doctest::Approx(a[1].area()).epsilon(1e-12));
}

TEST_CASE("anchor count is H*W*15 for the published config") {
  CHECK(generate_anchors(AnchorConfig{}, 30, 40).size() == 30u * 40u * 15u);
}

TEST_CASE("iou basics") {
  const BBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
  // unit squares overlapping by half: intersection 0.5, union 1.5
  CHECK(iou({0, 0, 1, 1}, {0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou is symmetric and translation invariant") {
  SplitMix64 rng(51);
  for (int i = 0; i < 200; ++i) {
    std::vector<BBox> pair = random_boxes(rng, 2);
    CHECK(iou(pair[0], pair[1]) == doctest::Approx(iou(pair[1], pair[0])).epsilon(1e-15));
    const double dx = rng.uniform(-40, 40), dy = rng.uniform(-40, 40);
    BBox a2{pair[0].x_min + dx, pair[0].y_min + dy, pair[0].x_max + dx, pair[0].y_max + dy};
    BBox b2{pair[1].x_min + dx, pair[1].y_min + dy, pair[1].x_max + dx, pair[1].y_max + dy};
    CHECK(iou(a2, b2) == doctest::Approx(iou(pair[0], pair[1])).epsilon(1e-9));
  }
}

TEST_CASE("nms keeps a single box") {
  const std::vector<int> kept = nms({{0, 0, 10, 10}}, {0.7}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == 0);
}

TEST_CASE("nms suppresses an identical lower-scoring duplicate") {
  const std::vector<BBox> boxes = {{0, 0, 10, 10}, {0, 0, 10, 10}};
  const std::vector<int> kept = nms(boxes, {0.9, 0.8}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == 0);
}

TEST_CASE("nms tie-break keeps the lower index") {
  const std::vector<BBox> boxes = {{0, 0, 10, 10}, {1, 1, 11, 11}};
  const std::vector<int> kept = nms(boxes, {0.8, 0.8}, 0.3);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == 0);
}

TEST_CASE("nms equals the O(n^2) reference on large random instances") {
  SplitMix64 rng(52);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<BBox> boxes = random_boxes(rng, 1000);
    std::vector<double> scores;
    for (int i = 0; i < 1000; ++i) scores.push_back(rng.next_double());
    const double thresh = 0.3 + 0.4 * rng.next_double();
    CHECK(nms(boxes, scores, thresh) == oracles::nms_reference(boxes, scores, thresh));
  }
}

TEST_CASE("roi assignment labels by IoU against ground truth") {
  const std::vector<BBox> gt = {{10, 10, 50, 50}};
  const std::vector<BBox> rois = {{10, 10, 50, 50}, {200, 200, 240, 240}};
  const std::vector<RoISample> samples = assign_and_sample_rois(rois, gt, 0.5, 64, 0.25, 7);
  REQUIRE(samples.size() == 2);
  int n_pos = 0;
  for (const RoISample& s : samples)
    if (s.label == RoiLabel::positive) {
      ++n_pos;
      CHECK(s.matched_gt == 0);
      CHECK(s.box.x_min == 10.0);
    }
  CHECK(n_pos == 1);
}

TEST_CASE("roi sampling hits the 1:3 positive:negative ratio when ample") {
  SplitMix64 rng(53);
  std::vector<BBox> gt = {{100, 100, 160, 160}};
  std::vector<BBox> rois;
  for (int i = 0; i < 50; ++i) {  // near-identical positives
    const double d = rng.uniform(-2, 2);
    rois.push_back({100 + d, 100 + d, 160 + d, 160 + d});
  }
  for (int i = 0; i < 50; ++i) {  // far negatives
    const double x = rng.uniform(300, 500);
    const double y = rng.uniform(300, 500);
    rois.push_back({x, y, x + 30, y + 30});
  }
  const std::vector<RoISample> samples = assign_and_sample_rois(rois, gt, 0.5, 64, 0.25, 99);
  int n_pos = 0, n_neg = 0;
  for (const RoISample& s : samples) (s.label == RoiLabel::positive ? n_pos : n_neg)++;
  CHECK(n_pos == 16);
  CHECK(n_neg == 48);
}

TEST_CASE("roi sampling is deterministic per seed and backfills scarce positives") {
  std::vector<BBox> gt = {{0, 0, 20, 20}};
  std::vector<BBox> rois = {{0, 0, 20, 20}};  // single positive
  for (int i = 0; i < 200; ++i) rois.push_back({300.0 + i, 300.0, 330.0 + i, 330.0});
  const std::vector<RoISample> a = assign_and_sample_rois(rois, gt, 0.5, 64, 0.25, 5);
  const std::vector<RoISample> b = assign_and_sample_rois(rois, gt, 0.5, 64, 0.25, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].box.x_min == b[i].box.x_min);
    CHECK(a[i].label == b[i].label);
  }
  int n_pos = 0, n_neg = 0;
  for (const RoISample& s : a) (s.label == RoiLabel::positive ? n_pos : n_neg)++;
  CHECK(n_pos == 1);
  CHECK(n_neg == 63);  // backfilled to the requested total
}

TEST_CASE("cross-boundary filter drops anchors leaving the image") {
  const std::vector<BBox> boxes = {{-4, 0, 10, 10}, {0, 0, 10, 10}, {600, 400, 700, 500}};
  const std::vector<int> keep = filter_inside_image(boxes, 640, 480);
  REQUIRE(keep.size() == 1);
  CHECK(keep[0] == 1);
}

TEST_CASE("top_k truncation keeps the best scores in order") {
  const std::vector<double> scores = {0.1, 0.9, 0.5, 0.9, 0.2};
  const std::vector<int> top = top_k_indices(scores, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == 1);  // tie broken toward the lower index
  CHECK(top[1] == 3);
  CHECK(top[2] == 2);
}

TEST_CASE("roi_align of a constant map is constant") {
  FeatureMap f(12, 12, 2);
  for (double& v : f.data) v = 3.25;
  const FeatureMap out = roi_align(f, {1.5, 2.0, 9.5, 10.0});
  for (double v : out.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("roi_align is exact on a linear ramp") {
  FeatureMap f(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) f.at(y, x, 0) = static_cast<double>(x);
  const BBox roi{2.3, 3.1, 12.7, 13.9};
  const FeatureMap out = roi_align(f, roi);
  const double bin_w = roi.width() / 7;
  for (int oy = 0; oy < 7; ++oy)
    for (int ox = 0; ox < 7; ++ox) {
      // interpolant of pixel value x at continuous coordinate u is u - 0.5;
      // the 4-sample average equals it at the cell centroid
      const double centroid_x = roi.x_min + (ox + 0.5) * bin_w;
      CHECK(out.at(oy, ox, 0) == doctest::Approx(centroid_x - 0.5).epsilon(1e-12));
    }
}

TEST_CASE("roi_align matches the per-sample-point oracle") {
  SplitMix64 rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMap f(20, 24, 3);
    for (double& v : f.data) v = rng.uniform(-5, 5);
    const double x0 = rng.uniform(0, 10), y0 = rng.uniform(0, 8);
    const BBox roi{x0, y0, x0 + rng.uniform(2, 12), y0 + rng.uniform(2, 10)};
    const FeatureMap out = roi_align(f, roi);
    for (int oy = 0; oy < 7; ++oy)
      for (int ox = 0; ox < 7; ++ox)
        for (int ch = 0; ch < 3; ++ch)
          CHECK(std::abs(out.at(oy, ox, ch) -
                         oracles::roi_align_cell_reference(f, roi, 7, oy, ox, ch)) < 1e-6);
  }
}

TEST_CASE("roi_align is linear in the feature map") {
  SplitMix64 rng(55);
  FeatureMap f(10, 10, 1), g(10, 10, 1);
  for (double& v : f.data) v = rng.uniform(-2, 2);
  for (double& v : g.data) v = rng.uniform(-2, 2);
  const double a = 1.7, b = -0.6;
  FeatureMap combo(10, 10, 1);
  for (std::size_t i = 0; i < combo.data.size(); ++i) combo.data[i] = a * f.data[i] + b * g.data[i];
  const BBox roi{1.2, 0.8, 8.9, 9.3};
  const FeatureMap of = roi_align(f, roi), og = roi_align(g, roi), oc = roi_align(combo, roi);
  for (std::size_t i = 0; i < oc.data.size(); ++i)
    CHECK(std::abs(oc.data[i] - (a * of.data[i] + b * og.data[i])) < 1e-9);
}

TEST_CASE("roi_align rejects empty and far out-of-bounds RoIs") {
  FeatureMap f(8, 8, 1);
  CHECK_THROWS_AS(roi_align(f, {2, 2, 2, 5}), std::invalid_argument);
  CHECK_THROWS_AS(roi_align(f, {2, 5, 5, 5}), std::invalid_argument);
  CHECK_THROWS_AS(roi_align(f, {-10, 0, 4, 4}), std::invalid_argument);
}
