#include "pose6d/pose_codec.hpp"

#include <stdexcept>

namespace pose6d {

PoseCode encode_pose(const Pose& pose) {
  if (!(pose.translation.z > 0.0))
    throw std::invalid_argument("encode_pose: t_z must be positive (object in front of camera)");
  return {log_map(pose.rotation), pose.translation.z};
}

Vec3 recover_translation(const BBox& bbox, double t_z, const Intrinsics& k) {
  if (!(t_z > 0.0)) throw std::invalid_argument("recover_translation: t_z must be positive");
  const Vec2 c = bbox.center();
  // Note: the v equation uses cy, not cx; the projection round trip forces it.
  return {(c.x - k.cx) * t_z / k.fx, (c.y - k.cy) * t_z / k.fy, t_z};
}

Pose decode_pose(const PoseCode& code, const BBox& bbox, const Intrinsics& k) {
  Pose pose;
  pose.rotation = exp_map(code.r);
  pose.translation = recover_translation(bbox, code.t_z, k);
  return pose;
}

}  // namespace pose6d
