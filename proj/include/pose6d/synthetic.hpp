#pragma once

#include <cstdint>
#include <vector>

#include "pose6d/mask.hpp"
#include "pose6d/metrics.hpp"
#include "pose6d/pose_codec.hpp"
#include "pose6d/random.hpp"

// Deterministic desk-scale ground truth: procedural point-cloud models,
// seeded pose sampling, mask/bbox rendering through the pinhole model, and
// controlled pose perturbations.

namespace pose6d {

enum class ShapeKind { box, cylinder, asymmetric_blob };

// Procedural surface point clouds, centred on the object frame origin:
//   box       - cube, side 0.1 m (corners always included)
//   cylinder  - radius 0.035 m, height 0.12 m, axis = object z; built from
//               regular rings so an exact 15-degree yaw maps the cloud onto
//               itself (the rotational-symmetry witness)
//   blob      - anisotropic ellipsoid with an off-axis lobe; no nontrivial
//               rotational self-symmetry
ObjectModel make_model(ShapeKind shape, int n_points, std::uint64_t seed);

struct PoseSampleParams {
  double tz_min = 0.5, tz_max = 0.9;  // metres
  double theta_max = 0.5;             // radians, rotation sampled in this ball
  bool yaw_full = false;              // additionally spin the object frame z axis
  double yaw_max = kPi;               // yaw spin range when yaw_full, radians
  double margin_px = 100;             // keep the center projection this far inside
};

// rotation = exp(uniform ball vector), optionally composed with a full-turn
// object-frame yaw; translation places the object center uniformly over the
// margin-inset image rectangle at a uniform depth.
Pose sample_pose(const PoseSampleParams& p, const Intrinsics& k, int image_w, int image_h,
                 SplitMix64& rng);
Pose sample_pose(const PoseSampleParams& p, const Intrinsics& k, int image_w, int image_h,
                 std::uint64_t seed);

struct GroundTruthInstance {
  int class_id = 0;
  BBox bbox;      // tight around the mask's on-pixels
  Mask mask;      // full image resolution
  Pose pose;
  PoseCode pose_code;
};

// Andrew monotone chain; returns the hull CCW in image coordinates (y down).
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

// Splatted convex fill of the projected points: mask = pixels whose centers
// fall inside the 2D convex hull. Throws if any point lies behind the camera
// or the silhouette leaves the image.
GroundTruthInstance render_instance(const ObjectModel& model, const Pose& pose,
                                    const Intrinsics& k, int image_w, int image_h,
                                    int class_id = 0);

// R' = exp(eps_r) * R with eps_r ~ N(0, rot_sigma) per axis (drawn first),
// t' = t + N(0, trans_sigma) per axis.
Pose perturb_pose(const Pose& pose, double rot_sigma, double trans_sigma, std::uint64_t seed);

// Exact-magnitude variant: rotation by exactly rot_angle about a random
// axis, translation by exactly trans_dist along a random direction.
Pose perturb_pose_exact(const Pose& pose, double rot_angle, double trans_dist,
                        std::uint64_t seed);

struct SceneObject {
  ObjectModel model;
  Pose pose;
  int class_id = 0;
};

struct SceneSpec {
  int image_w = 640, image_h = 480;
  Intrinsics intrinsics;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;
};

std::vector<GroundTruthInstance> generate_scene(const SceneSpec& spec);

// Feature embedding of a rendered instance for the toy pose head: 8 bbox
// geometry values, 7 normalized central mask moments (up to 3rd order), and
// a 7x7 occupancy grid over the box. Dimension 64.
inline constexpr int kFeatureDim = 64;
std::vector<double> instance_features(const GroundTruthInstance& inst, int image_w, int image_h);

struct ToySample {
  std::vector<double> features;
  PoseCode target;
};

struct ToyDatasetParams {
  ShapeKind shape = ShapeKind::asymmetric_blob;
  int n_samples = 2000;
  int n_points = 700;
  PoseSampleParams pose;
  Intrinsics k{580, 580, 320, 240};
  int image_w = 640, image_h = 480;
  std::uint64_t seed = 1;
};

// Renders n_samples seeded instances of one model and embeds them;
// bitwise deterministic for a given parameter set.
std::vector<ToySample> make_toy_dataset(const ToyDatasetParams& p);

}  // namespace pose6d
