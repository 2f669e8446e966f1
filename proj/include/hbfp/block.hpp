#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hbfp/rounding.hpp"

namespace hbfp {

// A block of signed integer mantissas sharing one power-of-two exponent.
// Element i has the exact value mantissa[i] * 2^(exponent - (width-1)), i.e.
// mantissas are read as fractions in (-1, 1). The range is symmetric:
// -2^(w-1) is never stored, so negation cannot overflow.
class BfpBlock {
 public:
  // Sentinel exponent carried by all-zero blocks. Large and negative so that
  // accidental use in scale composition is loud.
  static constexpr int kZeroExponent = -(1 << 20);
  static constexpr int kMinWidth = 2;
  static constexpr int kMaxWidth = 32;

  BfpBlock(std::vector<int32_t> mantissas, int exponent, int width);

  int64_t size() const { return static_cast<int64_t>(mantissas_.size()); }
  int exponent() const { return exponent_; }
  int width() const { return width_; }
  std::span<const int32_t> mantissas() const { return mantissas_; }
  int32_t mantissa(int64_t i) const { return mantissas_[static_cast<size_t>(i)]; }

  bool is_zero() const { return exponent_ == kZeroExponent; }

  // Exact real value of element i.
  double element(int64_t i) const {
    return std::ldexp(static_cast<double>(mantissas_[static_cast<size_t>(i)]),
                      exponent_ - (width_ - 1));
  }

  static int32_t max_mantissa(int width) { return static_cast<int32_t>((1u << (width - 1)) - 1); }

 private:
  std::vector<int32_t> mantissas_;
  int exponent_;
  int width_;
};

// Detects the shared exponent of a slice of finite values and normalizes the
// mantissas to `width` total bits (sign included). The exponent is chosen as
// floor(log2 max|v|) + 1, bumped by one more when nearest rounding of the
// largest magnitude would carry out of the mantissa range; out-of-range
// mantissas are still clamped defensively. All-zero input yields a zero block.
BfpBlock fp_to_bfp(std::span<const double> values, int width, const RoundingMode& mode);

// Exact inverse scaling of a block back to reals.
std::vector<double> bfp_to_fp(const BfpBlock& block);
void bfp_to_fp(const BfpBlock& block, std::span<double> out);

// Dot product of two equal-length, equal-width blocks. The mantissa products
// are summed in a single 64-bit accumulator with no intermediate rounding;
// the combined scale 2^(e_a + e_b - 2(w-1)) is applied once at the end.
// Requires 2w + ceil(log2 N) <= 64.
double bfp_dot(const BfpBlock& a, const BfpBlock& b);

// ceil(log2 n) for n >= 1.
int ceil_log2(int64_t n);

// Checks the 64-bit accumulator precondition for a dot of length n at width w.
void check_dot_capacity(int width, int64_t n);

// Running count of FP<->BFP conversions (blocks converted either direction).
// Lets tests prove that activation, loss, and optimizer arithmetic stay on
// the FP side.
uint64_t bfp_conversion_count();

}  // namespace hbfp
