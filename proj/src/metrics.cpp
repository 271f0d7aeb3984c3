#include "pose6d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pose6d/detection.hpp"

namespace pose6d {

double mask_iou(const Mask& a, const Mask& b) {
  if (a.w != b.w || a.h != b.h)
    throw std::invalid_argument("mask_iou: resolution mismatch");
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
    inter += (pa && pb);
    uni += (pa || pb);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double model_diameter(const std::vector<Vec3>& points) {
  if (points.size() < 2) throw std::invalid_argument("model_diameter: need at least 2 points");
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::max(best, norm2(points[i] - points[j]));
  return std::sqrt(best);
}

namespace {

BBox projected_bbox(const ObjectModel& model, const Pose& pose, const Intrinsics& k) {
  const std::vector<Vec2> px = project_points(transform_points(pose, model.points), k);
  BBox b{px[0].x, px[0].y, px[0].x, px[0].y};
  for (const Vec2& p : px) {
    b.x_min = std::min(b.x_min, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.x_max = std::max(b.x_max, p.x);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

}  // namespace

Pose2dResult pose_2d_metric(const ObjectModel& model, const Pose& gt, const Pose& est,
                            const Intrinsics& k) {
  if (model.points.empty()) throw std::invalid_argument("pose_2d_metric: empty model");
  const BBox bg = projected_bbox(model, gt, k);
  const BBox be = projected_bbox(model, est, k);
  Pose2dResult res;
  res.iou = iou(bg, be);
  res.accepted = res.iou > kPose2dIouThresh;
  return res;
}

Metric5cm5degResult metric_5cm5deg(const Pose& gt, const Pose& est) {
  Metric5cm5degResult res;
  res.trans_err_m = norm(gt.translation - est.translation);
  res.ang_err_rad = angular_distance(gt.rotation, est.rotation);
  res.accepted = res.trans_err_m <= kTransThresh && res.ang_err_rad <= kAngThresh;
  return res;
}

AddResult add_metric(const ObjectModel& model, const Pose& gt, const Pose& est) {
  if (model.points.empty()) throw std::invalid_argument("add_metric: empty model");
  if (!(model.diameter > 0)) throw std::invalid_argument("add_metric: diameter must be > 0");
  double sum = 0.0;
  for (const Vec3& p : model.points)
    sum += norm(transform_point(gt, p) - transform_point(est, p));
  AddResult res;
  res.add_m = sum / static_cast<double>(model.points.size());
  res.accepted = res.add_m < kAddDiameterFraction * model.diameter;
  return res;
}

PoseJudgement judge_pose(const ObjectModel& model, const Pose& gt, const Pose& est,
                         const Intrinsics& k) {
  PoseJudgement j;
  const Pose2dResult p2 = pose_2d_metric(model, gt, est, k);
  const Metric5cm5degResult m5 = metric_5cm5deg(gt, est);
  const AddResult ad = add_metric(model, gt, est);
  j.accepted_2d = p2.accepted;
  j.iou_2d = p2.iou;
  j.accepted_5cm5deg = m5.accepted;
  j.trans_err_m = m5.trans_err_m;
  j.ang_err_rad = m5.ang_err_rad;
  j.accepted_add = ad.accepted;
  j.add_m = ad.add_m;
  return j;
}

namespace {

// Shared greedy matcher; iou_fn(pred_idx, gt_idx) -> overlap.
template <typename IouFn>
MatchCounts greedy_match(std::size_t n_pred, std::size_t n_gt,
                         const std::vector<double>& scores, const std::vector<int>& pred_cls,
                         const std::vector<int>& gt_cls, double iou_thresh, IouFn&& iou_fn) {
  if (!(iou_thresh > 0.0 && iou_thresh < 1.0))
    throw std::invalid_argument("matching: iou threshold must be in (0, 1)");
  std::vector<int> order(n_pred);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<char> gt_used(n_gt, 0);
  MatchCounts c;
  for (int pi : order) {
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t gi = 0; gi < n_gt; ++gi) {
      if (gt_used[gi] || gt_cls[gi] != pred_cls[static_cast<std::size_t>(pi)]) continue;
      const double v = iou_fn(static_cast<std::size_t>(pi), gi);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best >= iou_thresh) {
      gt_used[static_cast<std::size_t>(best_gt)] = 1;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<int>(n_gt) - c.tp;
  return c;
}

}  // namespace

MatchCounts match_detections(const std::vector<Detection>& preds, const std::vector<GtBox>& gts,
                             double iou_thresh) {
  std::vector<double> scores;
  std::vector<int> pcls, gcls;
  for (const Detection& d : preds) {
    scores.push_back(d.score);
    pcls.push_back(d.class_id);
  }
  for (const GtBox& g : gts) gcls.push_back(g.class_id);
  return greedy_match(preds.size(), gts.size(), scores, pcls, gcls, iou_thresh,
                      [&](std::size_t p, std::size_t g) { return iou(preds[p].box, gts[g].box); });
}

double f1_from_counts(const MatchCounts& c) {
  if (c.tp == 0) return 0.0;
  const double p = static_cast<double>(c.tp) / (c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / (c.tp + c.fn);
  return 2.0 * p * r / (p + r);
}

double detection_f1(const std::vector<Detection>& preds, const std::vector<GtBox>& gts,
                    double iou_thresh) {
  return f1_from_counts(match_detections(preds, gts, iou_thresh));
}

MatchCounts match_masks(const std::vector<MaskDetection>& preds,
                        const std::vector<GtMaskInstance>& gts, double iou_thresh) {
  std::vector<double> scores;
  std::vector<int> pcls, gcls;
  for (const MaskDetection& d : preds) {
    scores.push_back(d.score);
    pcls.push_back(d.class_id);
  }
  for (const GtMaskInstance& g : gts) gcls.push_back(g.class_id);
  return greedy_match(preds.size(), gts.size(), scores, pcls, gcls, iou_thresh,
                      [&](std::size_t p, std::size_t g) {
                        return mask_iou(preds[p].mask, gts[g].mask);
                      });
}

double segmentation_f1(const std::vector<MaskDetection>& preds,
                       const std::vector<GtMaskInstance>& gts, double iou_thresh) {
  return f1_from_counts(match_masks(preds, gts, iou_thresh));
}

}  // namespace pose6d
