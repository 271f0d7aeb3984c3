#include "pose6d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pose6d {

namespace {

constexpr double kProbFloor = 1e-7;

double sign_or_zero(double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); }

void validate_weights(const LossWeights& w) {
  if (!(w.alpha1 > 0 && w.alpha2 > 0 && w.alpha3 > 0 && w.alpha4 > 0 && w.beta > 0))
    throw std::invalid_argument("loss weights must be positive");
  if (w.p != 1 && w.p != 2) throw std::invalid_argument("pose loss norm p must be 1 or 2");
}

}  // namespace

PoseLossResult pose_loss(const PoseCode& pred, const PoseCode& gt, const LossWeights& w) {
  validate_weights(w);
  const Vec3 dr = pred.r - gt.r;
  const double dz = pred.t_z - gt.t_z;
  PoseLossResult res;
  if (w.p == 1) {
    res.loss = std::abs(dr.x) + std::abs(dr.y) + std::abs(dr.z) + w.beta * std::abs(dz);
    res.grad = {sign_or_zero(dr.x), sign_or_zero(dr.y), sign_or_zero(dr.z),
                w.beta * sign_or_zero(dz)};
  } else {
    const double rn = norm(dr);
    res.loss = rn + w.beta * std::abs(dz);
    if (rn > 0) {
      res.grad[0] = dr.x / rn;
      res.grad[1] = dr.y / rn;
      res.grad[2] = dr.z / rn;
    }
    res.grad[3] = w.beta * sign_or_zero(dz);
  }
  return res;
}

ScalarLossResult softmax_cross_entropy(const std::vector<double>& logits, int label) {
  if (logits.empty()) throw std::invalid_argument("softmax_cross_entropy: empty logits");
  if (label < 0 || label >= static_cast<int>(logits.size()))
    throw std::invalid_argument("softmax_cross_entropy: label out of range");
  const double maxv = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - maxv);
    sum += p[i];
  }
  ScalarLossResult res;
  res.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] /= sum;
    res.grad[i] = p[i];
  }
  res.grad[static_cast<std::size_t>(label)] -= 1.0;
  res.loss = -(logits[static_cast<std::size_t>(label)] - maxv - std::log(sum));
  return res;
}

ScalarLossResult smooth_l1(const std::vector<double>& pred, const std::vector<double>& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("smooth_l1: size mismatch");
  ScalarLossResult res;
  res.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    if (!std::isfinite(d)) throw std::invalid_argument("smooth_l1: non-finite input");
    if (std::abs(d) < 1.0) {
      res.loss += 0.5 * d * d;
      res.grad[i] = d;
    } else {
      res.loss += std::abs(d) - 0.5;
      res.grad[i] = sign_or_zero(d);
    }
  }
  return res;
}

ScalarLossResult binary_cross_entropy_mask(const std::vector<double>& pred_prob,
                                           const std::vector<std::uint8_t>& gt_binary) {
  if (pred_prob.size() != gt_binary.size() || pred_prob.empty())
    throw std::invalid_argument("binary_cross_entropy_mask: size mismatch or empty");
  const double n = static_cast<double>(pred_prob.size());
  ScalarLossResult res;
  res.grad.resize(pred_prob.size(), 0.0);
  for (std::size_t i = 0; i < pred_prob.size(); ++i) {
    const double raw = pred_prob[i];
    const double p = std::clamp(raw, kProbFloor, 1.0 - kProbFloor);
    const double g = gt_binary[i] ? 1.0 : 0.0;
    res.loss += -(g * std::log(p) + (1.0 - g) * std::log(1.0 - p)) / n;
    if (raw > kProbFloor && raw < 1.0 - kProbFloor)
      res.grad[i] = (p - g) / (p * (1.0 - p)) / n;
  }
  return res;
}

LossBreakdown combine_losses(double l_cls, double l_box, double l_mask, double l_pose,
                             const LossWeights& w) {
  validate_weights(w);
  if (l_cls < 0 || l_box < 0 || l_mask < 0 || l_pose < 0)
    throw std::invalid_argument("combine_losses: component losses must be >= 0");
  LossBreakdown b;
  b.l_cls = l_cls;
  b.l_box = l_box;
  b.l_mask = l_mask;
  b.l_pose = l_pose;
  b.total = w.alpha1 * l_cls + w.alpha2 * l_box + w.alpha3 * l_mask + w.alpha4 * l_pose;
  return b;
}

LossBreakdown multi_task_loss(const std::vector<RoiLossInput>& rois, const LossWeights& w) {
  validate_weights(w);
  if (rois.empty()) throw std::invalid_argument("multi_task_loss: no RoIs");
  double cls_sum = 0, box_sum = 0, mask_sum = 0, pose_sum = 0;
  int n_pos = 0;
  for (const RoiLossInput& roi : rois) {
    if (!roi.positive && (roi.box || roi.mask || roi.pose))
      throw std::invalid_argument(
          "multi_task_loss: box/mask/pose targets attached to a negative RoI");
    cls_sum += softmax_cross_entropy(roi.class_logits, roi.class_label).loss;
    if (roi.positive) {
      ++n_pos;
      if (roi.box) box_sum += smooth_l1(roi.box->first, roi.box->second).loss;
      if (roi.mask) mask_sum += binary_cross_entropy_mask(roi.mask->first, roi.mask->second).loss;
      if (roi.pose) pose_sum += pose_loss(roi.pose->first, roi.pose->second, w).loss;
    }
  }
  const double l_cls = cls_sum / static_cast<double>(rois.size());
  const double denom = n_pos > 0 ? static_cast<double>(n_pos) : 1.0;
  return combine_losses(l_cls, box_sum / denom, mask_sum / denom, pose_sum / denom, w);
}

}  // namespace pose6d
