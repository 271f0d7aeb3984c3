#include "pose6d/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pose6d/random.hpp"

namespace pose6d {

std::vector<BBox> generate_anchors(const AnchorConfig& cfg, int feature_h, int feature_w) {
  if (feature_h < 1 || feature_w < 1)
    throw std::invalid_argument("generate_anchors: feature dims must be >= 1");
  if (cfg.scales.empty() || cfg.ratios.empty() || cfg.stride < 1)
    throw std::invalid_argument("generate_anchors: bad anchor config");
  std::vector<BBox> anchors;
  anchors.reserve(static_cast<std::size_t>(feature_h) * feature_w * cfg.scales.size() *
                  cfg.ratios.size());
  for (int y = 0; y < feature_h; ++y) {
    for (int x = 0; x < feature_w; ++x) {
      const double cx = (x + 0.5) * cfg.stride;
      const double cy = (y + 0.5) * cfg.stride;
      for (double s : cfg.scales) {
        for (double ratio : cfg.ratios) {
          // area s^2 at every ratio: w = s/sqrt(ratio), h = s*sqrt(ratio)
          const double w = s / std::sqrt(ratio);
          const double h = s * std::sqrt(ratio);
          anchors.push_back({cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0});
        }
      }
    }
  }
  return anchors;
}

double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("iou: invalid box");
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

std::vector<int> nms(const std::vector<BBox>& boxes, const std::vector<double>& scores,
                     double iou_threshold) {
  if (boxes.size() != scores.size()) throw std::invalid_argument("nms: size mismatch");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("nms: non-finite score");
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> kept;
  std::vector<char> suppressed(boxes.size(), 0);
  for (int idx : order) {
    if (suppressed[idx]) continue;
    kept.push_back(idx);
    for (int other : order) {
      if (suppressed[other] || other == idx) continue;
      if (iou(boxes[idx], boxes[other]) > iou_threshold) suppressed[other] = 1;
    }
  }
  return kept;
}

std::vector<int> filter_inside_image(const std::vector<BBox>& boxes, double w, double h) {
  std::vector<int> keep;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BBox& b = boxes[i];
    if (b.x_min >= 0 && b.y_min >= 0 && b.x_max <= w && b.y_max <= h)
      keep.push_back(static_cast<int>(i));
  }
  return keep;
}

std::vector<int> top_k_indices(const std::vector<double>& scores, int k) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  if (k < static_cast<int>(order.size())) order.resize(static_cast<std::size_t>(std::max(k, 0)));
  return order;
}

std::vector<RoISample> assign_and_sample_rois(const std::vector<BBox>& rois,
                                              const std::vector<BBox>& gt_boxes,
                                              double pos_iou, int total, double pos_fraction,
                                              std::uint64_t seed) {
  if (total <= 0) throw std::invalid_argument("assign_and_sample_rois: total must be > 0");
  std::vector<int> pos_idx, neg_idx;
  std::vector<int> matched(rois.size(), -1);
  for (std::size_t i = 0; i < rois.size(); ++i) {
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      const double v = iou(rois[i], gt_boxes[g]);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best >= pos_iou && best_gt >= 0) {
      pos_idx.push_back(static_cast<int>(i));
      matched[i] = best_gt;
    } else {
      neg_idx.push_back(static_cast<int>(i));
    }
  }

  SplitMix64 rng(seed);
  shuffle(pos_idx, rng);
  shuffle(neg_idx, rng);
  const int want_pos = static_cast<int>(std::llround(pos_fraction * total));
  const int n_pos = std::min<int>(want_pos, static_cast<int>(pos_idx.size()));
  const int n_neg = std::min<int>(total - n_pos, static_cast<int>(neg_idx.size()));

  std::vector<RoISample> out;
  out.reserve(static_cast<std::size_t>(n_pos + n_neg));
  for (int i = 0; i < n_pos; ++i)
    out.push_back({rois[static_cast<std::size_t>(pos_idx[i])], RoiLabel::positive,
                   matched[static_cast<std::size_t>(pos_idx[i])]});
  for (int i = 0; i < n_neg; ++i)
    out.push_back({rois[static_cast<std::size_t>(neg_idx[i])], RoiLabel::negative, -1});
  return out;
}

double bilinear_sample(const FeatureMap& f, double x, double y, int ch) {
  // Shift so pixel centers sit on integers, then clamp to the border.
  const double u = x - 0.5;
  const double v = y - 0.5;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double ax = u - x0;
  const double ay = v - y0;
  const auto cl = [](int i, int n) { return std::clamp(i, 0, n - 1); };
  const double v00 = f.at(cl(y0, f.h), cl(x0, f.w), ch);
  const double v01 = f.at(cl(y0, f.h), cl(x0 + 1, f.w), ch);
  const double v10 = f.at(cl(y0 + 1, f.h), cl(x0, f.w), ch);
  const double v11 = f.at(cl(y0 + 1, f.h), cl(x0 + 1, f.w), ch);
  return (1 - ay) * ((1 - ax) * v00 + ax * v01) + ay * ((1 - ax) * v10 + ax * v11);
}

FeatureMap roi_align(const FeatureMap& f, const BBox& roi, int out) {
  if (out < 1) throw std::invalid_argument("roi_align: output size must be >= 1");
  if (!(roi.width() > 0.0) || !(roi.height() > 0.0))
    throw std::invalid_argument("roi_align: empty RoI");
  const double tol = 1.0;
  if (roi.x_min < -tol || roi.y_min < -tol || roi.x_max > f.w + tol || roi.y_max > f.h + tol)
    throw std::invalid_argument("roi_align: RoI outside the feature map");

  const double bin_w = roi.width() / out;
  const double bin_h = roi.height() / out;
  FeatureMap pooled(out, out, f.c);
  for (int oy = 0; oy < out; ++oy) {
    for (int ox = 0; ox < out; ++ox) {
      for (int ch = 0; ch < f.c; ++ch) {
        double acc = 0.0;
        for (int sy = 0; sy < 2; ++sy) {
          for (int sx = 0; sx < 2; ++sx) {
            const double px = roi.x_min + (ox + (sx + 0.5) / 2.0) * bin_w;
            const double py = roi.y_min + (oy + (sy + 0.5) / 2.0) * bin_h;
            acc += bilinear_sample(f, px, py, ch);
          }
        }
        pooled.at(oy, ox, ch) = acc / 4.0;
      }
    }
  }
  return pooled;
}

}  // namespace pose6d
