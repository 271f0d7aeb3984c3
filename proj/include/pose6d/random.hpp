#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pose6d/geometry.hpp"

namespace pose6d {

// SplitMix64 stream with Box-Muller gaussians. Every randomized operation
// in the library draws from this generator so results are reproducible
// bit-for-bit across platforms for a given seed. A gaussian draw consumes
// exactly two uniforms (the second Box-Muller value is discarded, never
// cached); the draw order is part of the reproducibility contract.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our scales and
  // the modulo form is trivial to reproduce in other languages.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller.
  double gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  Vec3 gaussian3(double sigma) {
    return {sigma * gaussian(), sigma * gaussian(), sigma * gaussian()};
  }

  // Uniform over the radius-r ball, by rejection from the bounding cube.
  Vec3 in_ball(double r) {
    if (r <= 0.0) return {0, 0, 0};
    for (;;) {
      const Vec3 v = {uniform(-r, r), uniform(-r, r), uniform(-r, r)};
      if (norm2(v) <= r * r) return v;
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from (seed, stream id).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0xD1342543DE82EF95ull * (stream + 1)));
  return g.next_u64();
}

// Fisher-Yates shuffle driven by the explicit stream.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pose6d
