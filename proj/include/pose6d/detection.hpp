#pragma once

#include <cstdint>
#include <vector>

#include "pose6d/pose_codec.hpp"

// Detection-stage primitives: anchor generation, box IoU, greedy NMS, RoI
// assignment/sampling, and RoIAlign bilinear pooling. Boxes are half-open
// continuous intervals; pixel (i, j) has its center at (i + 0.5, j + 0.5).

namespace pose6d {

struct AnchorConfig {
  std::vector<double> scales = {16, 32, 64, 128, 256};  // side length of the 1:1 anchor
  std::vector<double> ratios = {2.0, 1.0, 0.5};         // h : w
  double stride = 16;                                   // pixels per feature cell
};

// One anchor per (cell, scale, ratio), centered on the cell center in image
// coordinates; cells iterate row-major, then scales, then ratios. Anchors
// are not clipped to the image; cross-boundary ones are filtered at
// assignment time (filter_inside_image).
std::vector<BBox> generate_anchors(const AnchorConfig& cfg, int feature_h, int feature_w);

double iou(const BBox& a, const BBox& b);

// Greedy NMS: repeatedly keep the highest-scoring remaining box and discard
// boxes with IoU > threshold against it. Equal scores tie-break on the lower
// index. Returns kept indices in score order.
std::vector<int> nms(const std::vector<BBox>& boxes, const std::vector<double>& scores,
                     double iou_threshold);

// Indices of boxes fully inside [0, w) x [0, h).
std::vector<int> filter_inside_image(const std::vector<BBox>& boxes, double w, double h);

// Indices of the k highest scores (descending, ties by lower index); the
// top-2000/top-1000 RoI truncation.
std::vector<int> top_k_indices(const std::vector<double>& scores, int k);

enum class RoiLabel { positive, negative };

struct RoISample {
  BBox box;
  RoiLabel label = RoiLabel::negative;
  int matched_gt = -1;  // index into gt_boxes for positives
};

// Labels each RoI positive iff its best IoU against any gt box reaches
// pos_iou, then samples at most pos_fraction*total positives and backfills
// with negatives. Deterministic for a given seed.
std::vector<RoISample> assign_and_sample_rois(const std::vector<BBox>& rois,
                                              const std::vector<BBox>& gt_boxes,
                                              double pos_iou, int total, double pos_fraction,
                                              std::uint64_t seed);

// Dense float image, row-major, C channels per pixel.
struct FeatureMap {
  int h = 0, w = 0, c = 1;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int height, int width, int channels)
      : h(height), w(width), c(channels),
        data(static_cast<std::size_t>(height) * width * channels, 0.0) {}

  double at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  double& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
};

// Bilinear interpolation over pixel centers; coordinates outside the center
// grid are clamped to the border.
double bilinear_sample(const FeatureMap& f, double x, double y, int ch);

// Quantization-free pooling: each output cell averages 4 bilinear samples on
// the cell's regular 2x2 sub-grid. The RoI is in feature-map coordinates and
// must lie within the map expanded by 1 pixel; throws on empty RoIs.
FeatureMap roi_align(const FeatureMap& f, const BBox& roi, int out = 7);

}  // namespace pose6d
