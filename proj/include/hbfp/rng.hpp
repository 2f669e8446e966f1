#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace hbfp {

// Marsaglia 32-bit xorshift: three constant shifts and three xors per draw.
// Zero is a fixed point of the recurrence, so a zero state is rejected.
class Xorshift {
 public:
  explicit Xorshift(uint32_t seed) : state_(seed) {
    if (seed == 0) throw std::invalid_argument("Xorshift: seed must be nonzero");
  }

  uint32_t next() {
    uint32_t y = state_;
    y ^= y << 13;
    y ^= y >> 17;
    y ^= y << 5;
    state_ = y;
    return y;
  }

  uint32_t state() const { return state_; }

 private:
  uint32_t state_;
};

// Derives an independent nonzero 32-bit seed from a base seed and up to two
// stream coordinates. Used to pre-split stochastic-rounding streams per tile,
// per row, and per training-step call site.
inline uint32_t derive_seed(uint32_t base, uint64_t a, uint64_t b = 0) {
  uint64_t x = static_cast<uint64_t>(base);
  x ^= (a + 1) * 0x9E3779B97F4A7C15ULL;
  x ^= (b + 1) * 0xC2B2AE3D27D4EB4FULL;
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  uint32_t s = static_cast<uint32_t>(x ^ (x >> 32));
  return s == 0 ? 0x9E3779B9u : s;
}

// splitmix64; plumbing RNG for dataset synthesis, init, and shuffling.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (one value per call, second discarded)
  double gaussian();

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }

 private:
  uint64_t state_;
};

inline double SplitMix64::gaussian() {
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace hbfp
