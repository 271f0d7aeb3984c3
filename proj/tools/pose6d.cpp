// pose6d command line: synthetic ground-truth generation, detection-file
// perturbation, pose/detection/segmentation evaluation, toy pose-head
// training, and the analytic-gradient check suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pose6d/io.hpp"

namespace {

int env_threads() {
  const char* v = std::getenv("POSE6D_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  if (n < 1) {
    std::cerr << "POSE6D_THREADS must be a positive integer, got '" << v << "'\n";
    std::exit(2);
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose6d: 6D object pose toolkit (synthetic scenes, pose codec, metrics)"};
  app.require_subcommand(1);

  // synthesize
  std::string synth_spec_path, synth_out_dir;
  CLI::App* synth = app.add_subcommand("synthesize", "Generate a ground-truth dataset from a spec file");
  synth->add_option("--spec", synth_spec_path, "Synthesis spec file (pose6d-synth v1)")->required();
  synth->add_option("--out", synth_out_dir, "Output dataset directory")->required();

  // perturb
  std::string pert_gt_dir, pert_out;
  double pert_rot_deg = 0.0, pert_trans_m = 0.0, pert_score = 1.0;
  bool pert_gaussian = false;
  std::uint64_t pert_seed = 0;
  CLI::App* pert = app.add_subcommand(
      "perturb", "Emit a detections file from ground truth with perturbed poses "
                 "(zero magnitudes reproduce the ground truth exactly)");
  pert->add_option("--gt", pert_gt_dir, "Ground-truth dataset directory")->required();
  pert->add_option("--out", pert_out, "Output detections file")->required();
  pert->add_option("--rot-deg", pert_rot_deg, "Rotation perturbation, degrees")
      ->capture_default_str();
  pert->add_option("--trans-m", pert_trans_m, "Translation perturbation, metres")
      ->capture_default_str();
  pert->add_flag("--gaussian", pert_gaussian,
                 "Treat magnitudes as per-axis sigmas instead of exact magnitudes");
  pert->add_option("--score", pert_score, "Score written to every record")->capture_default_str();
  pert->add_option("--seed", pert_seed, "Perturbation seed")->capture_default_str();

  // evaluate
  std::string eval_gt_dir, eval_det_path, eval_json_out, eval_text_out;
  double eval_score = 0.9, eval_nms = 0.5, eval_pair_iou = 0.25;
  CLI::App* eval = app.add_subcommand("evaluate",
                                      "Score a detections file against ground truth "
                                      "(2D-pose, 5cm5deg, ADD, detection/segmentation F1)");
  eval->add_option("--gt", eval_gt_dir, "Ground-truth dataset directory")->required();
  eval->add_option("--det", eval_det_path, "Detections file")->required();
  eval->add_option("--score-thresh", eval_score, "Keep detections with score strictly higher")
      ->capture_default_str();
  eval->add_option("--nms", eval_nms, "Per-class NMS IoU threshold")->capture_default_str();
  eval->add_option("--pair-iou", eval_pair_iou,
                   "Box IoU used to pair detections with ground truth for pose judging")
      ->capture_default_str();
  eval->add_option("--out-json", eval_json_out, "Also write the report as JSON");
  eval->add_option("--out-text", eval_text_out, "Also write the text report");

  // train-toy
  std::string toy_config_path, toy_out_dir = ".";
  CLI::App* toy = app.add_subcommand("train-toy",
                                     "Train the 4-layer pose head on a synthetic dataset and "
                                     "report held-out median errors");
  toy->add_option("--config", toy_config_path,
                  "Config file (pose6d-toy-config v1); defaults to the asymmetric-blob run");
  toy->add_option("--out-dir", toy_out_dir, "Directory for checkpoint and report")
      ->capture_default_str();

  // gradcheck
  double gc_eps = 1e-6;
  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "Verify every analytic gradient against central finite "
                                    "differences; exits nonzero on failure");
  gc->add_option("--eps", gc_eps, "Finite-difference step")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const pose6d::SynthSpec spec = pose6d::read_synth_spec(synth_spec_path);
      const pose6d::DatasetGt data = pose6d::synthesize_dataset(spec, synth_out_dir);
      int n_inst = 0;
      for (const pose6d::SceneGt& s : data.scenes) n_inst += static_cast<int>(s.instances.size());
      std::cout << "wrote " << data.scenes.size() << " scenes, " << n_inst << " instances, "
                << data.models.size() << " models to " << synth_out_dir << "\n";
      return 0;
    }

    if (*pert) {
      const pose6d::DatasetGt data = pose6d::read_dataset(pert_gt_dir);
      pose6d::PerturbOptions opt;
      opt.rot_angle_rad = pert_rot_deg * pose6d::kPi / 180.0;
      opt.trans_dist_m = pert_trans_m;
      opt.gaussian = pert_gaussian;
      opt.score = pert_score;
      opt.seed = pert_seed;
      const std::vector<pose6d::DetectionRecord> dets = pose6d::perturb_to_detections(data, opt);
      pose6d::write_detections(pert_out, dets);
      std::cout << "wrote " << dets.size() << " detection records to " << pert_out << "\n";
      return 0;
    }

    if (*eval) {
      const pose6d::DatasetGt data = pose6d::read_dataset(eval_gt_dir);
      const std::vector<pose6d::DetectionRecord> dets = pose6d::read_detections(eval_det_path);
      pose6d::EvalOptions opt;
      opt.score_thresh = eval_score;
      opt.nms_thresh = eval_nms;
      opt.pair_iou = eval_pair_iou;
      opt.threads = env_threads();
      const pose6d::EvalReport rep = pose6d::evaluate_detections(data, dets, opt);
      std::cout << rep.to_text();
      if (!eval_text_out.empty()) {
        std::ofstream out(eval_text_out);
        if (!out) throw std::runtime_error("cannot write " + eval_text_out);
        out << rep.to_text();
      }
      if (!eval_json_out.empty()) {
        std::ofstream out(eval_json_out);
        if (!out) throw std::runtime_error("cannot write " + eval_json_out);
        out << rep.to_json();
      }
      return 0;
    }

    if (*toy) {
      const pose6d::ToyRunConfig cfg = toy_config_path.empty()
                                           ? pose6d::default_toy_config()
                                           : pose6d::read_toy_config(toy_config_path);
      std::cout << "building dataset: " << pose6d::shape_name(cfg.data.shape) << ", "
                << cfg.data.n_samples << " samples\n";
      const std::vector<pose6d::ToySample> dataset = pose6d::make_toy_dataset(cfg.data);
      std::cout << "training " << cfg.train.iterations << " iterations\n";
      const pose6d::TrainResult result = pose6d::train_toy(dataset, cfg.train, cfg.loss);
      const std::string report = pose6d::error_report_text(result.report);
      std::cout << report;
      std::filesystem::create_directories(toy_out_dir);
      const std::string ckpt = toy_out_dir + "/" + cfg.out_checkpoint;
      const std::string rpt = toy_out_dir + "/" + cfg.out_report;
      pose6d::write_mlp(ckpt, result.mlp);
      {
        std::ofstream out(rpt);
        if (!out) throw std::runtime_error("cannot write " + rpt);
        out << report;
      }
      std::cout << "checkpoint " << ckpt << "\nreport " << rpt << "\n";
      return 0;
    }

    if (*gc) {
      return pose6d::run_gradcheck(gc_eps, std::cout) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
