#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pose6d/pose_codec.hpp"

// The multi-task training loss and its component losses, each returning the
// analytic gradient alongside the value.

namespace pose6d {

struct LossWeights {
  double alpha1 = 1.0;  // classification
  double alpha2 = 1.0;  // box regression
  double alpha3 = 2.0;  // mask
  double alpha4 = 2.0;  // pose
  double beta = 1.5;    // t_z weight inside the pose loss
  int p = 1;            // pose loss norm, 1 or 2
};

struct LossBreakdown {
  double l_cls = 0, l_box = 0, l_mask = 0, l_pose = 0;
  double total = 0;
};

struct PoseLossResult {
  double loss = 0;
  std::array<double, 4> grad{};  // d/d(r1, r2, r3, t_z) of the prediction
};

// |r - r_gt|_p + beta * |t_z - t_z_gt|_p. Subgradient 0 at p=1 kinks and at
// a zero p=2 rotation residual.
PoseLossResult pose_loss(const PoseCode& pred, const PoseCode& gt, const LossWeights& w);

struct ScalarLossResult {
  double loss = 0;
  std::vector<double> grad;
};

// -log softmax(logits)[label]; gradient = softmax - one_hot.
ScalarLossResult softmax_cross_entropy(const std::vector<double>& logits, int label);

// Per coordinate: 0.5*d^2 for |d| < 1, |d| - 0.5 otherwise; summed.
ScalarLossResult smooth_l1(const std::vector<double>& pred, const std::vector<double>& gt);

// Mean over pixels of -[g*ln p + (1-g)*ln(1-p)], probabilities clamped to
// [1e-7, 1 - 1e-7]. Gradient is zero where the clamp is active.
ScalarLossResult binary_cross_entropy_mask(const std::vector<double>& pred_prob,
                                           const std::vector<std::uint8_t>& gt_binary);

// Per-RoI inputs for the multi-task loss. Mask/pose (and box) targets may
// only be attached to positive RoIs.
struct RoiLossInput {
  std::vector<double> class_logits;
  int class_label = 0;
  bool positive = false;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> box;  // pred deltas, gt
  std::optional<std::pair<std::vector<double>, std::vector<std::uint8_t>>> mask;  // probs, gt
  std::optional<std::pair<PoseCode, PoseCode>> pose;  // pred, gt
};

// Weighted combination; enforces the breakdown invariant.
LossBreakdown combine_losses(double l_cls, double l_box, double l_mask, double l_pose,
                             const LossWeights& w);

// Component means (cls over all RoIs; box/mask/pose over positive RoIs),
// combined with the alphas. Throws if a negative RoI carries box, mask or
// pose targets.
LossBreakdown multi_task_loss(const std::vector<RoiLossInput>& rois, const LossWeights& w);

}  // namespace pose6d
