#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cud/calibrate.hpp"
#include "cud/simplex.hpp"

namespace cud::losses {

using simplex::Distribution;
using simplex::Logits;

// Teacher-side objective weights: cross entropy, focal term, gated entropy
// reward. The gate w(x) = 1{p_y < tau} + rho * (1 - p_y)^beta switches entropy
// shaping on for wrong or low-confidence predictions only.
struct DUSParams {
  double lambda_ce = 1.0;
  double lambda_f = 1.0;
  double lambda_h = 0.1;
  double alpha_y = 1.0;
  double gamma = 10.0;
  double gate_threshold_tau = 0.5;
  double gate_rho = 1.0;
  double gate_beta = 2.0;
  // When set, the (1 - p_y)^beta part of the gate is differentiated through;
  // default keeps the gate a per-example constant.
  bool differentiable_gate = false;

  void validate() const {
    if (lambda_ce < 0.0 || lambda_f < 0.0 || lambda_h < 0.0)
      throw std::invalid_argument("DUSParams: loss weights must be >= 0");
    if (lambda_ce == 0.0 && lambda_f == 0.0)
      throw std::invalid_argument("DUSParams: at least one of lambda_ce, lambda_f must be > 0");
    if (!(alpha_y > 0.0 && alpha_y <= 1.0))
      throw std::invalid_argument("DUSParams: alpha_y must be in (0,1]");
    if (gamma < 0.0) throw std::invalid_argument("DUSParams: gamma must be >= 0");
    if (!(gate_threshold_tau > 0.0 && gate_threshold_tau < 1.0))
      throw std::invalid_argument("DUSParams: gate_threshold_tau must be in (0,1)");
    if (gate_rho < 0.0 || gate_beta < 0.0)
      throw std::invalid_argument("DUSParams: gate_rho and gate_beta must be >= 0");
  }
};

// Student-side distillation weights.
struct KDParams {
  double lambda_kd = 0.8;
  double lambda_ce_student = 0.2;
  double kd_temperature = 2.0;

  void validate() const {
    if (lambda_kd < 0.0 || lambda_ce_student < 0.0)
      throw std::invalid_argument("KDParams: weights must be >= 0");
    if (lambda_kd + lambda_ce_student <= 0.0)
      throw std::invalid_argument("KDParams: lambda_kd + lambda_ce_student must be > 0");
    if (!(kd_temperature > 0.0))
      throw std::invalid_argument("KDParams: kd_temperature must be > 0");
  }
};

inline double cross_entropy(const Distribution& dist, std::size_t label) {
  if (label >= dist.size()) throw std::invalid_argument("cross_entropy: label out of range");
  const Distribution p = simplex::floored(dist);
  return -std::log(p[label]);
}

// -alpha_y * (1 - p_y)^gamma * log p_y. gamma = 0 reduces to alpha_y * CE.
inline double focal_term(const Distribution& dist, std::size_t label, double alpha_y,
                         double gamma) {
  if (label >= dist.size()) throw std::invalid_argument("focal_term: label out of range");
  const Distribution p = simplex::floored(dist);
  const double p_y = p[label];
  const double one_minus = std::max(1.0 - p_y, 0.0);
  return alpha_y * std::pow(one_minus, gamma) * (-std::log(p_y));
}

// w(x) = 1{p_y < tau} + rho * (1 - p_y)^beta. Strict inequality in the
// indicator.
inline double difficulty_gate(double p_y, const DUSParams& params) {
  if (!(p_y >= 0.0 && p_y <= 1.0)) throw std::invalid_argument("difficulty_gate: p_y out of [0,1]");
  const double indicator = p_y < params.gate_threshold_tau ? 1.0 : 0.0;
  return indicator + params.gate_rho * std::pow(std::max(1.0 - p_y, 0.0), params.gate_beta);
}

// L = lambda_ce * CE + lambda_f * focal - lambda_h * w(x) * H(p), p = softmax(z).
// The entropy reward makes the total signed.
inline double teacher_loss(const Logits& logits, std::size_t label, const DUSParams& params) {
  params.validate();
  if (label >= logits.size()) throw std::invalid_argument("teacher_loss: label out of range");
  const Distribution p = simplex::softmax(logits, 1.0);
  const double p_y = p[label];
  const double ce = cross_entropy(p, label);
  const double focal = focal_term(p, label, params.alpha_y, params.gamma);
  const double gate = difficulty_gate(p_y, params);
  const double ent = simplex::entropy(p);
  return params.lambda_ce * ce + params.lambda_f * focal - params.lambda_h * gate * ent;
}

namespace detail {

// d/dp_y of the focal term -alpha (1-p_y)^g log p_y, with the p_y -> 1 and
// g = 0 limits handled explicitly.
inline double focal_dpy(double p_y, double alpha, double gamma) {
  const double one_minus = std::max(1.0 - p_y, 0.0);
  const double log_py = std::log(std::max(p_y, simplex::kProbFloor));
  double d = -alpha * std::pow(one_minus, gamma) / std::max(p_y, simplex::kProbFloor);
  if (gamma > 0.0 && one_minus > 0.0) {
    d += alpha * gamma * std::pow(one_minus, gamma - 1.0) * log_py;
  }
  return d;
}

}  // namespace detail

// Analytic gradient of teacher_loss with respect to the logits. The gate
// indicator is treated as locally constant; the smooth part of the gate is
// differentiated only when params.differentiable_gate is set.
inline std::vector<double> teacher_loss_grad(const Logits& logits, std::size_t label,
                                             const DUSParams& params) {
  params.validate();
  if (label >= logits.size()) throw std::invalid_argument("teacher_loss_grad: label out of range");
  const std::size_t n = logits.size();
  const Distribution p = simplex::softmax(logits, 1.0);
  const double p_y = p[label];
  const double ent = simplex::entropy(p);
  const double gate = difficulty_gate(p_y, params);
  const double dfocal = detail::focal_dpy(p_y, params.alpha_y, params.gamma);

  double dgate = 0.0;
  if (params.differentiable_gate && params.gate_beta > 0.0 && p_y < 1.0) {
    dgate = -params.gate_rho * params.gate_beta *
            std::pow(1.0 - p_y, params.gate_beta - 1.0);
  }

  std::vector<double> grad(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double onehot = k == label ? 1.0 : 0.0;
    const double dpy_dzk = p_y * (onehot - p[k]);  // softmax Jacobian row for p_y
    const double log_pk = std::log(std::max(p[k], simplex::kProbFloor));
    const double dent_dzk = -p[k] * (log_pk + ent);
    double g = params.lambda_ce * (p[k] - onehot);
    g += params.lambda_f * dfocal * dpy_dzk;
    g += -params.lambda_h * gate * dent_dzk;
    if (dgate != 0.0) g += -params.lambda_h * ent * dgate * dpy_dzk;
    grad[k] = g;
  }
  return grad;
}

// Eq.-style student objective:
//   lambda_kd * tau^2 * KL(resoften(target, tau) || softmax(z, tau))
//   + lambda_ce_student * CE(softmax(z, 1), y)         (labeled examples only)
inline double student_loss(const Logits& student_logits, const calibrate::CalibratedTarget& target,
                           std::optional<std::size_t> label, const KDParams& params) {
  params.validate();
  if (target.dist.size() != student_logits.size())
    throw std::invalid_argument("student_loss: class-count mismatch");
  const double tau = params.kd_temperature;
  const Distribution tempered = simplex::resoften(target.dist, tau);
  const Distribution student_tau = simplex::softmax(student_logits, tau);
  double loss = params.lambda_kd * tau * tau * simplex::kl_divergence(tempered, student_tau);
  if (label.has_value()) {
    if (*label >= student_logits.size())
      throw std::invalid_argument("student_loss: label out of range");
    loss += params.lambda_ce_student * cross_entropy(simplex::softmax(student_logits, 1.0), *label);
  }
  return loss;
}

// Gradient of student_loss with respect to the student logits:
//   KD part: lambda_kd * tau * (softmax(z, tau) - tempered_target)
//   CE part: lambda_ce_student * (softmax(z, 1) - onehot(y))
inline std::vector<double> student_loss_grad(const Logits& student_logits,
                                             const calibrate::CalibratedTarget& target,
                                             std::optional<std::size_t> label,
                                             const KDParams& params) {
  params.validate();
  if (target.dist.size() != student_logits.size())
    throw std::invalid_argument("student_loss_grad: class-count mismatch");
  const std::size_t n = student_logits.size();
  const double tau = params.kd_temperature;
  const Distribution tempered = simplex::resoften(target.dist, tau);
  const Distribution student_tau = simplex::softmax(student_logits, tau);
  std::vector<double> grad(n);
  for (std::size_t k = 0; k < n; ++k) {
    grad[k] = params.lambda_kd * tau * (student_tau[k] - tempered[k]);
  }
  if (label.has_value()) {
    if (*label >= n) throw std::invalid_argument("student_loss_grad: label out of range");
    const Distribution student = simplex::softmax(student_logits, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double onehot = k == *label ? 1.0 : 0.0;
      grad[k] += params.lambda_ce_student * (student[k] - onehot);
    }
  }
  return grad;
}

}  // namespace cud::losses
