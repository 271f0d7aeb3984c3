#include "pose6d/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pose6d {

namespace {

void validate_widths(const std::vector<int>& widths) {
  if (widths.size() != kMlpLayers + 1)
    throw std::invalid_argument("mlp: expected exactly 4 weight layers (5 widths)");
  if (widths.back() != kMlpOutputs)
    throw std::invalid_argument("mlp: output width must be 4");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("mlp: widths must be positive");
}

struct Activations {
  std::vector<std::vector<double>> z;  // pre-activation per layer
  std::vector<std::vector<double>> a;  // post-activation per layer (a[0] = input)
};

void forward_cached(const MLP& mlp, const std::vector<double>& x, Activations& acts) {
  if (static_cast<int>(x.size()) != mlp.widths.front())
    throw std::invalid_argument("mlp_forward: input width mismatch");
  acts.z.resize(mlp.layers.size());
  acts.a.resize(mlp.layers.size() + 1);
  acts.a[0] = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MLP::Layer& ly = mlp.layers[l];
    acts.z[l].assign(static_cast<std::size_t>(ly.out), 0.0);
    const std::vector<double>& in = acts.a[l];
    for (int o = 0; o < ly.out; ++o) {
      double s = ly.b[static_cast<std::size_t>(o)];
      const double* wrow = &ly.w[static_cast<std::size_t>(o) * ly.in];
      for (int i = 0; i < ly.in; ++i) s += wrow[i] * in[static_cast<std::size_t>(i)];
      acts.z[l][static_cast<std::size_t>(o)] = s;
    }
    const bool last = (l + 1 == mlp.layers.size());
    acts.a[l + 1] = acts.z[l];
    if (!last)
      for (double& v : acts.a[l + 1]) v = std::max(0.0, v);
  }
}

struct Grads {
  std::vector<std::vector<double>> gw, gb;

  explicit Grads(const MLP& mlp) {
    for (const MLP::Layer& ly : mlp.layers) {
      gw.emplace_back(ly.w.size(), 0.0);
      gb.emplace_back(ly.b.size(), 0.0);
    }
  }
};

// Accumulates parameter gradients of pose_loss for one sample; returns the loss.
double backprop_sample(const MLP& mlp, const ToySample& s, const LossWeights& w, Grads& g) {
  Activations acts;
  forward_cached(mlp, s.features, acts);
  const std::vector<double>& out = acts.a.back();
  const PoseCode pred{{out[0], out[1], out[2]}, out[3]};
  const PoseLossResult pl = pose_loss(pred, s.target, w);

  std::vector<double> delta(pl.grad.begin(), pl.grad.end());
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const MLP::Layer& ly = mlp.layers[l];
    const std::vector<double>& in = acts.a[l];
    for (int o = 0; o < ly.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      g.gb[l][static_cast<std::size_t>(o)] += d;
      double* grow = &g.gw[l][static_cast<std::size_t>(o) * ly.in];
      for (int i = 0; i < ly.in; ++i) grow[i] += d * in[static_cast<std::size_t>(i)];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(ly.in), 0.0);
    for (int i = 0; i < ly.in; ++i) {
      double s_acc = 0;
      for (int o = 0; o < ly.out; ++o)
        s_acc += ly.w[static_cast<std::size_t>(o) * ly.in + i] *
                 delta[static_cast<std::size_t>(o)];
      // ReLU derivative on the previous layer's pre-activation
      prev[static_cast<std::size_t>(i)] =
          acts.z[l - 1][static_cast<std::size_t>(i)] > 0 ? s_acc : 0.0;
    }
    delta = std::move(prev);
  }
  return pl.loss;
}

double mean_loss(const MLP& mlp, const std::vector<const ToySample*>& samples,
                 const LossWeights& w) {
  double sum = 0;
  for (const ToySample* s : samples) {
    const std::array<double, 4> out = mlp_forward(mlp, s->features);
    sum += pose_loss({{out[0], out[1], out[2]}, out[3]}, s->target, w).loss;
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

MLP init_mlp(const std::vector<int>& widths, std::uint64_t seed) {
  validate_widths(widths);
  MLP mlp;
  mlp.widths = widths;
  SplitMix64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MLP::Layer ly;
    ly.in = widths[l];
    ly.out = widths[l + 1];
    ly.w.resize(static_cast<std::size_t>(ly.in) * ly.out);
    ly.b.assign(static_cast<std::size_t>(ly.out), 0.0);
    const double bound = std::sqrt(6.0 / ly.in);
    for (double& v : ly.w) v = rng.uniform(-bound, bound);
    mlp.layers.push_back(std::move(ly));
  }
  return mlp;
}

std::array<double, 4> mlp_forward(const MLP& mlp, const std::vector<double>& x) {
  Activations acts;
  forward_cached(mlp, x, acts);
  const std::vector<double>& out = acts.a.back();
  return {out[0], out[1], out[2], out[3]};
}

SgdState make_sgd_state(const MLP& mlp) {
  SgdState st;
  for (const MLP::Layer& ly : mlp.layers) {
    st.vw.emplace_back(ly.w.size(), 0.0);
    st.vb.emplace_back(ly.b.size(), 0.0);
  }
  return st;
}

double train_step(MLP& mlp, SgdState& state, const std::vector<const ToySample*>& batch,
                  const TrainConfig& cfg, const LossWeights& w) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  Grads g(mlp);
  double loss = 0;
  for (const ToySample* s : batch) loss += backprop_sample(mlp, *s, w, g);
  loss /= static_cast<double>(batch.size());
  if (!std::isfinite(loss))
    throw std::runtime_error("train_step: non-finite loss at step " +
                             std::to_string(state.step) + "; lower the learning rate");

  const double scale = 1.0 / static_cast<double>(batch.size());
  const double lr = state.step >= cfg.lr_decay_step
                        ? cfg.learning_rate / cfg.lr_decay_factor
                        : cfg.learning_rate;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    MLP::Layer& ly = mlp.layers[l];
    for (std::size_t i = 0; i < ly.w.size(); ++i) {
      state.vw[l][i] = cfg.momentum * state.vw[l][i] + g.gw[l][i] * scale;
      ly.w[i] -= lr * (state.vw[l][i] + cfg.weight_decay * ly.w[i]);
    }
    for (std::size_t i = 0; i < ly.b.size(); ++i) {
      state.vb[l][i] = cfg.momentum * state.vb[l][i] + g.gb[l][i] * scale;
      ly.b[i] -= lr * state.vb[l][i];  // no decay on biases
    }
  }
  ++state.step;
  return loss;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
  return (v[mid - 1] + hi) / 2.0;
}

}  // namespace

TrainResult train_toy(const std::vector<ToySample>& dataset, const TrainConfig& cfg,
                      const LossWeights& w) {
  if (dataset.size() < 8) throw std::invalid_argument("train_toy: dataset too small");
  if (!(cfg.learning_rate > 0) || cfg.batch_size < 1)
    throw std::invalid_argument("train_toy: bad config");
  if (!(cfg.holdout_fraction >= 0 && cfg.holdout_fraction < 1))
    throw std::invalid_argument("train_toy: holdout fraction must be in [0, 1)");

  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 split_rng(mix_seed(cfg.seed, 100));
  shuffle(order, split_rng);
  const int n_eval = static_cast<int>(std::lround(cfg.holdout_fraction * dataset.size()));
  const int n_train = static_cast<int>(dataset.size()) - n_eval;
  if (n_train < 1) throw std::invalid_argument("train_toy: no training samples left");

  std::vector<const ToySample*> train, eval;
  for (int i = 0; i < n_train; ++i) train.push_back(&dataset[static_cast<std::size_t>(order[i])]);
  for (int i = n_train; i < static_cast<int>(dataset.size()); ++i)
    eval.push_back(&dataset[static_cast<std::size_t>(order[i])]);

  TrainResult res;
  res.mlp = init_mlp(cfg.widths, mix_seed(cfg.seed, 101));
  SgdState state = make_sgd_state(res.mlp);
  res.report.initial_loss = mean_loss(res.mlp, train, w);
  res.report.n_train = n_train;
  res.report.n_eval = n_eval;

  SplitMix64 batch_rng(mix_seed(cfg.seed, 102));
  std::vector<const ToySample*> batch(static_cast<std::size_t>(cfg.batch_size));
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int b = 0; b < cfg.batch_size; ++b)
      batch[static_cast<std::size_t>(b)] =
          train[static_cast<std::size_t>(batch_rng.next_below(static_cast<std::uint64_t>(n_train)))];
    train_step(res.mlp, state, batch, cfg, w);
  }
  res.report.final_loss = mean_loss(res.mlp, train, w);

  std::vector<double> ang, tz, yaw, offaxis;
  const std::vector<const ToySample*>& scored = eval.empty() ? train : eval;
  for (const ToySample* s : scored) {
    const std::array<double, 4> out = mlp_forward(res.mlp, s->features);
    const Mat3 r_est = exp_map({out[0], out[1], out[2]});
    const Mat3 r_gt = exp_map(s->target.r);
    ang.push_back(angular_distance(r_gt, r_est));
    tz.push_back(std::abs(out[3] - s->target.t_z));
    const Vec3 err = log_map(transpose(r_gt) * r_est);  // object-frame error rotation
    yaw.push_back(std::abs(err.z));
    offaxis.push_back(std::sqrt(err.x * err.x + err.y * err.y));
  }
  res.report.median_ang_rad = median(ang);
  res.report.median_tz_m = median(tz);
  res.report.median_yaw_rad = median(yaw);
  res.report.median_offaxis_rad = median(offaxis);
  return res;
}

double grad_check(const MLP& mlp, const ToySample& sample, double eps, const LossWeights& w) {
  if (!(eps > 0)) throw std::invalid_argument("grad_check: eps must be > 0");
  Grads g(mlp);
  backprop_sample(mlp, sample, w, g);

  MLP probe = mlp;
  const std::vector<const ToySample*> one = {&sample};
  double worst = 0.0;
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto check_param = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + eps;
      const double up = mean_loss(probe, one, w);
      p = saved - eps;
      const double dn = mean_loss(probe, one, w);
      p = saved;
      const double numeric = (up - dn) / (2.0 * eps);
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, rel);
    };
    for (std::size_t i = 0; i < probe.layers[l].w.size(); ++i)
      check_param(probe.layers[l].w[i], g.gw[l][i]);
    for (std::size_t i = 0; i < probe.layers[l].b.size(); ++i)
      check_param(probe.layers[l].b[i], g.gb[l][i]);
  }
  return worst;
}

}  // namespace pose6d
