#pragma once

#include <cstdint>
#include <vector>

#include "pose6d/losses.hpp"
#include "pose6d/synthetic.hpp"

// From-scratch fully connected pose head with backpropagation, trained with
// the pose regression loss on synthetic features. Four weight layers, ReLU
// after each hidden layer, raw (sign-unconstrained) 4-value output.

namespace pose6d {

struct MLP {
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major [out][in]
    std::vector<double> b;  // [out]
  };
  std::vector<int> widths;    // {input, h1, h2, h3, 4}
  std::vector<Layer> layers;  // exactly 4
};

inline constexpr int kMlpLayers = 4;
inline constexpr int kMlpOutputs = 4;

// Fan-in-scaled uniform weights from the seeded stream, zero biases.
// Throws unless widths describes exactly 4 layers ending in width 4.
MLP init_mlp(const std::vector<int>& widths, std::uint64_t seed);

// Raw head output (r1, r2, r3, t_z); throws on input width mismatch.
std::array<double, 4> mlp_forward(const MLP& mlp, const std::vector<double>& x);

struct TrainConfig {
  std::vector<int> widths = {kFeatureDim, 64, 128, 64, 4};
  double learning_rate = 0.02;
  double momentum = 0.9;
  double weight_decay = 0.0005;  // decoupled, weights only
  int iterations = 6000;
  int lr_decay_step = 4500;  // lr divided by lr_decay_factor from this step on
  double lr_decay_factor = 10.0;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.2;
};

// Momentum buffers and the step counter; reset when training restarts.
struct SgdState {
  std::vector<std::vector<double>> vw, vb;
  long long step = 0;
};

SgdState make_sgd_state(const MLP& mlp);

// One SGD-with-momentum step on the mean pose loss over the batch, with
// decoupled weight decay applied to weights only. Returns the batch loss
// (pre-update). Throws if the loss turns non-finite.
double train_step(MLP& mlp, SgdState& state, const std::vector<const ToySample*>& batch,
                  const TrainConfig& cfg, const LossWeights& w);

struct ErrorReport {
  double median_ang_rad = 0;      // geodesic rotation error
  double median_tz_m = 0;         // |t_z - t_z_gt|
  double median_yaw_rad = 0;      // object-frame z component of the error rotation
  double median_offaxis_rad = 0;  // object-frame xy magnitude of the error rotation
  double initial_loss = 0;        // mean train loss before the first step
  double final_loss = 0;          // mean train loss after the last step
  int n_train = 0, n_eval = 0;
};

struct TrainResult {
  MLP mlp;
  ErrorReport report;
};

// Shuffles the dataset with cfg.seed, holds out the configured fraction,
// trains on the rest and reports held-out median errors. Bitwise
// reproducible given (dataset, cfg, w).
TrainResult train_toy(const std::vector<ToySample>& dataset, const TrainConfig& cfg,
                      const LossWeights& w);

// Max relative error between backprop and central finite differences over
// every parameter, on the single-sample pose loss.
double grad_check(const MLP& mlp, const ToySample& sample, double eps, const LossWeights& w);

}  // namespace pose6d
