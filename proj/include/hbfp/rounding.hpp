#pragma once

#include <cmath>
#include <cstdint>

#include "hbfp/rng.hpp"

namespace hbfp {

// Mantissa rounding strategy. STOCHASTIC carries the base seed of its
// xorshift stream; one draw is consumed per rounded element, in element order.
struct RoundingMode {
  enum class Kind { NearestEven, Stochastic };

  Kind kind = Kind::NearestEven;
  uint32_t seed = 1;

  static RoundingMode nearest_even() { return {Kind::NearestEven, 1}; }
  static RoundingMode stochastic(uint32_t seed) { return {Kind::Stochastic, seed}; }

  bool is_stochastic() const { return kind == Kind::Stochastic; }

  // Same strategy on an independent derived stream; no-op for nearest-even.
  RoundingMode split(uint64_t a, uint64_t b = 0) const {
    if (!is_stochastic()) return *this;
    return stochastic(derive_seed(seed, a, b));
  }
};

// Round-half-to-even, independent of the FPU rounding mode.
inline int64_t round_nearest_even(double x) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  const int64_t base = static_cast<int64_t>(fl);
  if (frac > 0.5) return base + 1;
  if (frac < 0.5) return base;
  return (base % 2 == 0) ? base : base + 1;
}

// floor(x)+1 with probability frac(x); unbiased in expectation. Always
// consumes exactly one draw.
inline int64_t round_stochastic(double x, Xorshift& rng) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  const uint64_t draw = rng.next();
  const uint64_t threshold = static_cast<uint64_t>(frac * 4294967296.0);  // frac * 2^32
  return static_cast<int64_t>(fl) + (draw < threshold ? 1 : 0);
}

inline int64_t round_value(double x, const RoundingMode& mode, Xorshift& rng) {
  return mode.is_stochastic() ? round_stochastic(x, rng) : round_nearest_even(x);
}

}  // namespace hbfp
