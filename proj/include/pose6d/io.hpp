#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pose6d/detection.hpp"
#include "pose6d/metrics.hpp"
#include "pose6d/mlp.hpp"
#include "pose6d/synthetic.hpp"

// Line-oriented structured text formats (versioned headers, 17-significant-
// digit floats for exact round trips) and the evaluation / synthesis
// pipelines behind the CLI.

namespace pose6d {

struct ParseError : std::runtime_error {
  ParseError(const std::string& path, int line, const std::string& msg);
};

std::string fmt_double(double v);  // %.17g

// --- single-value files -----------------------------------------------------

ObjectModel read_model(const std::string& path);
void write_model(const std::string& path, const ObjectModel& m);

Intrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Intrinsics& k);

Pose read_pose(const std::string& path);
void write_pose(const std::string& path, const Pose& p);

MLP read_mlp(const std::string& path);
void write_mlp(const std::string& path, const MLP& mlp);

// --- detections --------------------------------------------------------------

// One record per detected instance; the mask is optional.
struct DetectionRecord {
  int image_id = 0;
  int class_id = 0;
  double score = 0;
  BBox box;
  PoseCode code;
  std::optional<Mask> mask;
};

std::vector<DetectionRecord> read_detections(const std::string& path);
void write_detections(const std::string& path, const std::vector<DetectionRecord>& dets);

// RLE over row-major pixels, runs alternating off/on starting with off.
std::vector<long long> mask_to_rle(const Mask& m);
Mask rle_to_mask(int w, int h, const std::vector<long long>& runs);

// --- ground-truth datasets ----------------------------------------------------

struct SceneGt {
  int image_id = 0;
  std::vector<GroundTruthInstance> instances;
};

struct DatasetGt {
  int image_w = 0, image_h = 0;
  Intrinsics k;
  std::map<int, ObjectModel> models;  // by class id
  std::vector<SceneGt> scenes;
};

SceneGt read_scene_gt(const std::string& path);
void write_scene_gt(const std::string& path, const SceneGt& scene);

DatasetGt read_dataset(const std::string& dir);
void write_dataset(const std::string& dir, const DatasetGt& data);

// --- synthesis ----------------------------------------------------------------

struct SynthClassSpec {
  int class_id = 0;
  ShapeKind shape = ShapeKind::box;
  int n_points = 500;
};

struct SynthSpec {
  int image_w = 640, image_h = 480;
  Intrinsics k{580, 580, 320, 240};
  std::uint64_t seed = 7;
  int n_scenes = 20;
  PoseSampleParams pose;
  std::vector<SynthClassSpec> classes;
};

SynthSpec read_synth_spec(const std::string& path);
ShapeKind parse_shape(const std::string& name);
std::string shape_name(ShapeKind shape);

// Builds the models, samples one pose per (scene, class) and writes the
// ground-truth directory. Deterministic for a given spec.
DatasetGt synthesize_dataset(const SynthSpec& spec, const std::string& out_dir);

// --- perturbed / perfect detections -------------------------------------------

struct PerturbOptions {
  double rot_angle_rad = 0;  // exact magnitude unless gaussian
  double trans_dist_m = 0;
  bool gaussian = false;  // interpret magnitudes as sigmas instead
  double score = 1.0;
  std::uint64_t seed = 0;
};

// Re-renders each gt instance under the perturbed pose and emits one
// detection record per instance; zero-magnitude exact perturbation
// reproduces the ground truth bit-for-bit.
std::vector<DetectionRecord> perturb_to_detections(const DatasetGt& data,
                                                   const PerturbOptions& opt);

// --- evaluation ----------------------------------------------------------------

struct EvalOptions {
  double score_thresh = 0.9;  // keep detections with score strictly higher
  double nms_thresh = 0.5;    // per image and class
  double pair_iou = 0.25;     // box IoU used to pair detections with gt for pose judging
  int threads = 1;            // per-scene fan-out; merge order is fixed
};

struct ClassEval {
  int class_id = 0;
  int n_gt = 0;
  int n_matched = 0;
  double acc_2d = 0, acc_5cm5deg = 0, acc_add = 0;
  double det_f1_05 = 0, det_f1_09 = 0;
  double seg_f1_05 = 0, seg_f1_09 = 0;
};

struct EvalReport {
  double score_thresh = 0, nms_thresh = 0;
  int n_scenes = 0, n_gt = 0, n_detections_kept = 0;
  std::vector<ClassEval> classes;  // sorted by class id
  ClassEval mean;                  // class_id = -1, averaged over classes

  std::string to_text() const;
  std::string to_json() const;
};

EvalReport evaluate_detections(const DatasetGt& data, const std::vector<DetectionRecord>& dets,
                               const EvalOptions& opt);

// --- toy training run -----------------------------------------------------------

struct ToyRunConfig {
  ToyDatasetParams data;
  TrainConfig train;
  LossWeights loss;
  std::string out_checkpoint = "toy_mlp.txt";
  std::string out_report = "toy_report.txt";
};

ToyRunConfig read_toy_config(const std::string& path);
ToyRunConfig default_toy_config();  // the asymmetric-blob run

std::string error_report_text(const ErrorReport& r);

// Runs every analytic-vs-finite-difference check (losses and MLP backprop);
// prints one line per check and returns false if any exceeds 1e-4.
bool run_gradcheck(double eps, std::ostream& out);

}  // namespace pose6d
