#pragma once

#include "pose6d/geometry.hpp"

// Decoupled pose encoding: the 4-value regression target (rotation vector +
// t_z) and the pinhole recovery of t_x, t_y from a bounding-box center.

namespace pose6d {

// What the pose head regresses: so(3) rotation vector plus the z component
// of the translation, metres.
struct PoseCode {
  Vec3 r;
  double t_z = 0.0;
};

// Axis-aligned box in continuous pixel coordinates, half-open intervals
// [x_min, x_max) x [y_min, y_max).
struct BBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
};

// r = log(R), t_z = translation.z; t_x and t_y are discarded (they are
// recovered later from the box center). Throws if t_z <= 0.
PoseCode encode_pose(const Pose& pose);

// t_x = (u0 - cx) * t_z / fx, t_y = (v0 - cy) * t_z / fy, where (u0, v0) is
// the box center. Throws if t_z <= 0.
Vec3 recover_translation(const BBox& bbox, double t_z, const Intrinsics& k);

// R = exp(code.r); translation recovered from the box center and code.t_z.
Pose decode_pose(const PoseCode& code, const BBox& bbox, const Intrinsics& k);

}  // namespace pose6d
