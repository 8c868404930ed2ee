#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cud/rng.hpp"
#include "cud/simplex.hpp"

namespace cud::model {

using simplex::Logits;

// Linear or one-hidden-layer softmax classifier. Hidden activation is tanh.
// Weights are row-major (out x in) per layer.
struct MlpClassifier {
  std::vector<std::size_t> layer_dims;        // (input, [hidden], classes)
  std::vector<std::vector<double>> weights;   // one row-major matrix per layer
  std::vector<std::vector<double>> biases;    // one vector per layer

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t num_classes() const { return layer_dims.back(); }
};

// Parameter-shaped gradient buffers.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

inline Gradients zero_gradients(const MlpClassifier& m) {
  Gradients g;
  g.weights.reserve(m.num_layers());
  g.biases.reserve(m.num_layers());
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    g.weights.emplace_back(m.weights[l].size(), 0.0);
    g.biases.emplace_back(m.biases[l].size(), 0.0);
  }
  return g;
}

// AdamW with decoupled weight decay and global-norm gradient clipping.
struct OptimizerState {
  std::size_t step_count = 0;
  std::vector<std::vector<double>> first_moment_w, second_moment_w;
  std::vector<std::vector<double>> first_moment_b, second_moment_b;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double grad_clip_norm = 1.0;
};

inline OptimizerState make_optimizer_state(const MlpClassifier& m, double lr = 1e-2,
                                           double weight_decay = 0.01,
                                           double grad_clip_norm = 1.0) {
  if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("optimizer: grad_clip_norm must be > 0");
  OptimizerState s;
  s.lr = lr;
  s.weight_decay = weight_decay;
  s.grad_clip_norm = grad_clip_norm;
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    s.first_moment_w.emplace_back(m.weights[l].size(), 0.0);
    s.second_moment_w.emplace_back(m.weights[l].size(), 0.0);
    s.first_moment_b.emplace_back(m.biases[l].size(), 0.0);
    s.second_moment_b.emplace_back(m.biases[l].size(), 0.0);
  }
  return s;
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases,
// reproducible per seed.
inline MlpClassifier init_classifier(const std::vector<std::size_t>& layer_dims,
                                     std::uint64_t seed) {
  if (layer_dims.size() != 2 && layer_dims.size() != 3)
    throw std::invalid_argument("init_classifier: need (input, classes) or (input, hidden, classes)");
  for (std::size_t d : layer_dims) {
    if (d == 0) throw std::invalid_argument("init_classifier: zero layer dimension");
  }
  if (layer_dims.back() < 2)
    throw std::invalid_argument("init_classifier: need at least 2 output classes");

  MlpClassifier m;
  m.layer_dims = layer_dims;
  SplitMix64 rng(derive_seed(seed, "model-init"));
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_out * fan_in);
    for (double& v : w) v = rng.next_uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

namespace detail {

inline void affine(const std::vector<double>& w, const std::vector<double>& b,
                   const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  out.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace detail

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> input;
  std::vector<double> hidden;  // post-tanh; empty for linear models
  std::vector<double> logits;
};

inline ForwardCache forward_cached(const MlpClassifier& m, const std::vector<double>& features) {
  if (features.size() != m.input_dim())
    throw std::invalid_argument("forward: feature length does not match input dim");
  ForwardCache cache;
  cache.input = features;
  if (m.num_layers() == 1) {
    detail::affine(m.weights[0], m.biases[0], features, cache.logits);
  } else {
    detail::affine(m.weights[0], m.biases[0], features, cache.hidden);
    for (double& h : cache.hidden) h = std::tanh(h);
    detail::affine(m.weights[1], m.biases[1], cache.hidden, cache.logits);
  }
  return cache;
}

inline Logits forward(const MlpClassifier& m, const std::vector<double>& features) {
  return Logits(forward_cached(m, features).logits);
}

// Accumulates dL/dparams into grads given upstream = dL/dlogits.
inline void backward(const MlpClassifier& m, const ForwardCache& cache,
                     const std::vector<double>& upstream, Gradients& grads) {
  if (upstream.size() != m.num_classes())
    throw std::invalid_argument("backward: upstream length does not match class count");
  const std::size_t last = m.num_layers() - 1;
  const std::vector<double>& last_in = m.num_layers() == 1 ? cache.input : cache.hidden;

  for (std::size_t r = 0; r < upstream.size(); ++r) {
    double* gw = grads.weights[last].data() + r * last_in.size();
    for (std::size_t c = 0; c < last_in.size(); ++c) gw[c] += upstream[r] * last_in[c];
    grads.biases[last][r] += upstream[r];
  }
  if (m.num_layers() == 1) return;

  const std::size_t hidden_n = cache.hidden.size();
  std::vector<double> dhidden(hidden_n, 0.0);
  for (std::size_t r = 0; r < upstream.size(); ++r) {
    const double* wr = m.weights[1].data() + r * hidden_n;
    for (std::size_t c = 0; c < hidden_n; ++c) dhidden[c] += upstream[r] * wr[c];
  }
  for (std::size_t c = 0; c < hidden_n; ++c) {
    dhidden[c] *= 1.0 - cache.hidden[c] * cache.hidden[c];  // tanh'
  }
  for (std::size_t r = 0; r < hidden_n; ++r) {
    double* gw = grads.weights[0].data() + r * cache.input.size();
    for (std::size_t c = 0; c < cache.input.size(); ++c) gw[c] += dhidden[r] * cache.input[c];
    grads.biases[0][r] += dhidden[r];
  }
}

inline double global_grad_norm(const Gradients& g) {
  double sq = 0.0;
  for (const auto& layer : g.weights)
    for (double v : layer) sq += v * v;
  for (const auto& layer : g.biases)
    for (double v : layer) sq += v * v;
  return std::sqrt(sq);
}

// One AdamW update. Clips the global gradient norm first; weight decay is
// applied directly to the parameters, independent of the moments.
inline void optimizer_step(MlpClassifier& m, const Gradients& grads, OptimizerState& state) {
  const double norm = global_grad_norm(grads);
  const double scale = norm > state.grad_clip_norm ? state.grad_clip_norm / norm : 1.0;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

  const auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                          std::vector<double>& m1, std::vector<double>& m2) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i] * scale;
      m1[i] = state.beta1 * m1[i] + (1.0 - state.beta1) * gi;
      m2[i] = state.beta2 * m2[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m1[i] / bc1;
      const double vhat = m2[i] / bc2;
      theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
      theta[i] -= state.lr * state.weight_decay * theta[i];
    }
  };
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    update(m.weights[l], grads.weights[l], state.first_moment_w[l], state.second_moment_w[l]);
    update(m.biases[l], grads.biases[l], state.first_moment_b[l], state.second_moment_b[l]);
  }
}

// Linear warmup over the first 10% of steps, cosine decay to zero after.
inline double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr) {
  if (total_steps == 0) throw std::invalid_argument("lr_schedule: total_steps must be > 0");
  if (!(base_lr > 0.0)) throw std::invalid_argument("lr_schedule: base_lr must be > 0");
  const double t = static_cast<double>(std::min(step, total_steps));
  const double total = static_cast<double>(total_steps);
  const double warmup = 0.1 * total;
  if (t < warmup) return base_lr * t / warmup;
  const double progress = (t - warmup) / (total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace cud::model
