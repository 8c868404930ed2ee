#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cud/simplex.hpp"

namespace cud::calibrate {

using simplex::Distribution;
using simplex::Logits;

// Which operator produced a calibrated target.
enum class Operator { identity, w_clip, exact_tilt, temp_scale, label_smooth };

inline const char* to_string(Operator op) {
  switch (op) {
    case Operator::identity: return "identity";
    case Operator::w_clip: return "w_clip";
    case Operator::exact_tilt: return "exact_tilt";
    case Operator::temp_scale: return "temp_scale";
    case Operator::label_smooth: return "label_smooth";
  }
  return "unknown";
}

struct WClipParams {
  double eta = 0.5;             // wrong-mass budget fraction, in (0,1)
  double margin_scale_m = 0.7;  // margin suppression scale, in (0,1]

  void validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("WClipParams: eta must be in (0,1)");
    if (!(margin_scale_m > 0.0 && margin_scale_m <= 1.0))
      throw std::invalid_argument("WClipParams: margin_scale_m must be in (0,1]");
  }
};

// A teacher distribution after calibration, with provenance.
struct CalibratedTarget {
  Distribution dist;
  Operator op = Operator::identity;
  double delta_applied = 0.0;
  bool constraint_active = false;
};

// Dual solution of the wrong-mass projection.
struct TiltSolution {
  double nu = 0.0;          // dual variable; 0 iff the constraint was inactive
  double partition_z = 1.0; // normalizer of the tilted distribution
  int iterations = 0;       // bisection steps taken
};

// Moves delta = min(eta * p_{k*}, m * (p_{k*} - p_y)) from the wrong top-1
// class to the true class; every other entry is preserved bit-identically.
// When the top-1 prediction is already the true label the input passes
// through untouched.
inline CalibratedTarget w_clip(const Distribution& dist, std::size_t true_label,
                               const WClipParams& params) {
  params.validate();
  if (true_label >= dist.size()) throw std::invalid_argument("w_clip: label index out of range");
  const std::size_t top = simplex::argmax(dist);
  if (top == true_label) return {dist, Operator::identity, 0.0, false};

  const double p_top = dist[top];
  const double p_true = dist[true_label];
  const double delta_budget = params.eta * p_top;
  const double delta_margin = params.margin_scale_m * (p_top - p_true);
  const double delta = std::min(delta_budget, delta_margin);

  std::vector<double> q = dist.probs();
  q[true_label] += delta;
  q[top] -= delta;
  return {Distribution(std::move(q)), Operator::w_clip, delta, delta > 0.0};
}

// Exact KL projection onto { q : q[wrong_class] <= max_wrong_mass }.
// The minimizer is an exponential tilt q_k = p_k * exp(-nu * [k == wrong]) / Z,
// which rescales every unconstrained class by the same factor and therefore
// preserves their pairwise ratios. nu is found by bisection on
//   g(nu) = p_w e^{-nu} / (p_w e^{-nu} + 1 - p_w) - max_wrong_mass
// over [0, 50]; g is strictly decreasing so the root is unique.
inline std::pair<CalibratedTarget, TiltSolution> exact_tilt_projection(const Distribution& dist,
                                                                       std::size_t wrong_class,
                                                                       double max_wrong_mass) {
  if (wrong_class >= dist.size())
    throw std::invalid_argument("exact_tilt_projection: class index out of range");
  if (!(max_wrong_mass > 0.0 && max_wrong_mass < 1.0))
    throw std::invalid_argument("exact_tilt_projection: max_wrong_mass must be in (0,1)");

  const Distribution p = simplex::floored(dist);
  const double p_w = p[wrong_class];
  if (p_w <= max_wrong_mass) {
    return {CalibratedTarget{p, Operator::identity, 0.0, false}, TiltSolution{0.0, 1.0, 0}};
  }

  const auto residual = [&](double nu) {
    const double scaled = p_w * std::exp(-nu);
    return scaled / (scaled + (1.0 - p_w)) - max_wrong_mass;
  };

  double lo = 0.0, hi = 50.0, nu = 0.0;
  int iter = 0;
  bool converged = false;
  for (; iter < 200; ++iter) {
    nu = 0.5 * (lo + hi);
    const double g = residual(nu);
    if (std::abs(g) <= 1e-10) {
      converged = true;
      break;
    }
    if (g > 0.0) {
      lo = nu;
    } else {
      hi = nu;
    }
  }
  if (!converged)
    throw std::runtime_error("exact_tilt_projection: bisection failed to converge in 200 steps");

  const double tilt = std::exp(-nu);
  const double z = p_w * tilt + (1.0 - p_w);
  std::vector<double> q(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    q[k] = p[k] * (k == wrong_class ? tilt : 1.0) / z;
  }
  CalibratedTarget target{Distribution(std::move(q)), Operator::exact_tilt, p_w - p_w * tilt / z,
                          true};
  return {std::move(target), TiltSolution{nu, z, iter + 1}};
}

// Temperature-scaling baseline: softmax(z / temperature).
inline CalibratedTarget temperature_scale(const Logits& logits, double temperature) {
  return {simplex::softmax(logits, temperature), Operator::temp_scale, 0.0, false};
}

// Label-smoothing baseline: (1 - eps) on the true class, eps / (C - 1) elsewhere.
inline CalibratedTarget label_smooth(std::size_t true_label, std::size_t num_classes,
                                     double eps_ls) {
  if (num_classes < 2) throw std::invalid_argument("label_smooth: need at least 2 classes");
  if (true_label >= num_classes) throw std::invalid_argument("label_smooth: label out of range");
  if (!(eps_ls >= 0.0 && eps_ls < 1.0))
    throw std::invalid_argument("label_smooth: eps must be in [0,1)");
  std::vector<double> q(num_classes, eps_ls / static_cast<double>(num_classes - 1));
  q[true_label] = 1.0 - eps_ls;
  return {Distribution(std::move(q)), Operator::label_smooth, 0.0, false};
}

}  // namespace cud::calibrate
