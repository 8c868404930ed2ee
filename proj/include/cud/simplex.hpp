#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cud::simplex {

// Global contracts for points on the probability simplex.
inline constexpr double kSumTolerance = 1e-9;
inline constexpr double kProbFloor = 1e-12;

// Pre-softmax scores of a classifier over C >= 2 classes.
class Logits {
 public:
  explicit Logits(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw std::invalid_argument("Logits: need at least 2 classes");
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("Logits: non-finite value");
    }
  }

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// A validated point on the simplex: entries >= 0, sum within kSumTolerance of 1.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw std::invalid_argument("Distribution: need at least 2 classes");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument("Distribution: entries must be finite and >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw std::invalid_argument("Distribution: probabilities must sum to 1 within 1e-9");
  }

  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

// Index of the largest entry (first one on ties).
inline std::size_t argmax(const Distribution& d) {
  return static_cast<std::size_t>(
      std::max_element(d.probs().begin(), d.probs().end()) - d.probs().begin());
}

// Floor entries at kProbFloor and renormalize; identity when nothing is below
// the floor. Applied before any log so zero-mass entries stay harmless.
inline Distribution floored(const Distribution& d) {
  bool touched = false;
  for (double p : d.probs()) {
    if (p < kProbFloor) {
      touched = true;
      break;
    }
  }
  if (!touched) return d;
  std::vector<double> q = d.probs();
  double sum = 0.0;
  for (double& p : q) {
    p = std::max(p, kProbFloor);
    sum += p;
  }
  for (double& p : q) p /= sum;
  return Distribution(std::move(q));
}

// softmax(z / temperature) with max-subtraction for stability.
inline Distribution softmax(const Logits& z, double temperature = 1.0) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be > 0");
  const std::size_t n = z.size();
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = z[i] / temperature;
  const double zmax = *std::max_element(scaled.begin(), scaled.end());
  double sum = 0.0;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = std::exp(scaled[i] - zmax);
    sum += e[i];
  }
  for (double& v : e) v /= sum;
  return Distribution(std::move(e));
}

// Target-side tempering: p^{1/temperature} renormalized, i.e.
// softmax(log p / temperature). Input is floored first.
inline Distribution resoften(const Distribution& d, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("resoften: temperature must be > 0");
  const Distribution base = floored(d);
  if (temperature == 1.0) return base;
  std::vector<double> q(base.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    q[i] = std::pow(base[i], 1.0 / temperature);
    sum += q[i];
  }
  for (double& v : q) v /= sum;
  return Distribution(std::move(q));
}

// Shannon entropy in nats; 0 log 0 = 0. Range [0, ln C].
inline double entropy(const Distribution& d) {
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

// Forward KL(p || q) in nats. q is floored so the support condition cannot
// fail; entries with p = 0 contribute 0.
inline double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw std::domain_error("kl_divergence: length mismatch");
  const Distribution qf = floored(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / qf[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace cud::simplex
