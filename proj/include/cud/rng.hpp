#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cud {

// Deterministic counter-style generator (SplitMix64). The stream is part of
// the artifact contract so other implementations can match it exactly:
//
//   state <- state + 0x9E3779B97F4A7C15            (wrapping, per draw)
//   out   <- finalize(state):
//              z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//              z ^= z >> 27;  z *= 0x94D049BB133111EB;
//              z ^= z >> 31;
//
//   uniform double in [0,1):  (out >> 11) * 2^-53
//   uniform index below n:    out % n
//   standard normal:          Box-Muller on two consecutive uniforms,
//                             r = sqrt(-2 ln(1-u1)),
//                             first draw r*cos(2*pi*u2), second r*sin(2*pi*u2)
//
// Sub-streams are derived as derive_seed(seed, tag) below, never by offsetting
// the parent stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Modulo bias is < n/2^64, irrelevant at this scale.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// FNV-1a over the tag bytes.
inline std::uint64_t fnv1a64(std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Independent sub-stream seed for (seed, purpose-tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t z = seed ^ fnv1a64(tag);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cud
