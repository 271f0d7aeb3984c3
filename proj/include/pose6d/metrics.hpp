#pragma once

#include <vector>

#include "pose6d/geometry.hpp"
#include "pose6d/mask.hpp"
#include "pose6d/pose_codec.hpp"

// Pose-acceptance metrics (2D-pose, 5cm5deg, ADD) and detection /
// segmentation F1 scoring.

namespace pose6d {

// Point-cloud object model in its own coordinate frame, metres.
struct ObjectModel {
  std::vector<Vec3> points;
  double diameter = 0.0;  // max pairwise point distance
};

double model_diameter(const std::vector<Vec3>& points);

// Acceptance thresholds, as used throughout: the 2D-pose IoU must exceed
// 0.5 strictly; 5cm5deg errors are accepted up to and including the
// thresholds; ADD must stay strictly under 10% of the diameter.
inline constexpr double kPose2dIouThresh = 0.5;
inline constexpr double kTransThresh = 0.05;            // metres
inline constexpr double kAngThresh = 5.0 * kPi / 180.0;  // radians
inline constexpr double kAddDiameterFraction = 0.1;

struct Pose2dResult {
  double iou = 0;
  bool accepted = false;
};

// Projects the model under both poses, takes the axis-aligned box of each
// projection, accepts iff IoU > 0.5. Throws if any model point falls behind
// the camera under either pose.
Pose2dResult pose_2d_metric(const ObjectModel& model, const Pose& gt, const Pose& est,
                            const Intrinsics& k);

struct Metric5cm5degResult {
  double trans_err_m = 0;
  double ang_err_rad = 0;
  bool accepted = false;
};

Metric5cm5degResult metric_5cm5deg(const Pose& gt, const Pose& est);

struct AddResult {
  double add_m = 0;
  bool accepted = false;
};

// Mean distance between model points transformed by the two poses, accepted
// iff strictly below 10% of the model diameter.
AddResult add_metric(const ObjectModel& model, const Pose& gt, const Pose& est);

// All three acceptance criteria for one (gt, est) pair.
struct PoseJudgement {
  bool accepted_2d = false, accepted_5cm5deg = false, accepted_add = false;
  double iou_2d = 0, trans_err_m = 0, ang_err_rad = 0, add_m = 0;
};

PoseJudgement judge_pose(const ObjectModel& model, const Pose& gt, const Pose& est,
                         const Intrinsics& k);

struct Detection {
  int class_id = 0;
  double score = 0;
  BBox box;
};

struct GtBox {
  int class_id = 0;
  BBox box;
};

struct MatchCounts {
  int tp = 0, fp = 0, fn = 0;
};

// Greedy one-to-one matching by descending score; a prediction is TP iff it
// shares the class and reaches iou_thresh with a still-unmatched gt.
MatchCounts match_detections(const std::vector<Detection>& preds, const std::vector<GtBox>& gts,
                             double iou_thresh);

// 2*P*R/(P+R); 0 when undefined.
double f1_from_counts(const MatchCounts& c);

double detection_f1(const std::vector<Detection>& preds, const std::vector<GtBox>& gts,
                    double iou_thresh);

struct MaskDetection {
  int class_id = 0;
  double score = 0;
  Mask mask;
};

struct GtMaskInstance {
  int class_id = 0;
  Mask mask;
};

MatchCounts match_masks(const std::vector<MaskDetection>& preds,
                        const std::vector<GtMaskInstance>& gts, double iou_thresh);

// As detection_f1 with pixel-wise mask IoU. Throws on resolution mismatch.
double segmentation_f1(const std::vector<MaskDetection>& preds,
                       const std::vector<GtMaskInstance>& gts, double iou_thresh);

}  // namespace pose6d
