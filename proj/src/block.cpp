#include "hbfp/block.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hbfp {

namespace {

std::atomic<uint64_t> g_conversions{0};

void check_width(int width) {
  if (width < BfpBlock::kMinWidth || width > BfpBlock::kMaxWidth)
    throw std::invalid_argument("BfpBlock: width " + std::to_string(width) +
                                " outside [2, 32]");
}

}  // namespace

BfpBlock::BfpBlock(std::vector<int32_t> mantissas, int exponent, int width)
    : mantissas_(std::move(mantissas)), exponent_(exponent), width_(width) {
  check_width(width_);
  if (mantissas_.empty()) throw std::invalid_argument("BfpBlock: empty mantissa sequence");
  const int32_t limit = max_mantissa(width_);
  bool all_zero = true;
  for (int32_t m : mantissas_) {
    if (m < -limit || m > limit)
      throw std::invalid_argument("BfpBlock: mantissa " + std::to_string(m) +
                                  " outside symmetric range at width " + std::to_string(width_));
    if (m != 0) all_zero = false;
  }
  if (all_zero) exponent_ = kZeroExponent;
}

BfpBlock fp_to_bfp(std::span<const double> values, int width, const RoundingMode& mode) {
  check_width(width);
  if (values.empty()) throw std::invalid_argument("fp_to_bfp: empty input");

  double amax = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v))
      throw std::invalid_argument("fp_to_bfp: non-finite value at index " + std::to_string(i));
    const double a = std::fabs(v);
    if (a > amax) amax = a;
  }
  g_conversions.fetch_add(1, std::memory_order_relaxed);

  std::vector<int32_t> mantissas(values.size(), 0);
  if (amax == 0.0) return BfpBlock(std::move(mantissas), BfpBlock::kZeroExponent, width);

  // floor(log2 amax) + 1, so every |v|/2^e < 1.
  int exponent = std::ilogb(amax) + 1;
  const int32_t limit = BfpBlock::max_mantissa(width);
  // If nearest rounding of the largest magnitude would carry to 2^(w-1),
  // widen the exponent by one instead of clamping. Keeps the round-trip
  // error at half an LSB and is rounding-mode independent.
  if (std::ldexp(amax, width - 1 - exponent) > static_cast<double>(limit) + 0.5) ++exponent;

  const int shift = width - 1 - exponent;
  Xorshift rng(mode.is_stochastic() ? mode.seed : 1);
  for (size_t i = 0; i < values.size(); ++i) {
    int64_t m = round_value(std::ldexp(values[i], shift), mode, rng);
    if (m > limit) m = limit;
    if (m < -limit) m = -limit;
    mantissas[i] = static_cast<int32_t>(m);
  }
  return BfpBlock(std::move(mantissas), exponent, width);
}

void bfp_to_fp(const BfpBlock& block, std::span<double> out) {
  if (static_cast<int64_t>(out.size()) != block.size())
    throw std::invalid_argument("bfp_to_fp: output span length mismatch");
  g_conversions.fetch_add(1, std::memory_order_relaxed);
  const int shift = block.exponent() - (block.width() - 1);
  const auto ms = block.mantissas();
  for (size_t i = 0; i < ms.size(); ++i)
    out[i] = std::ldexp(static_cast<double>(ms[i]), shift);
}

std::vector<double> bfp_to_fp(const BfpBlock& block) {
  std::vector<double> out(static_cast<size_t>(block.size()));
  bfp_to_fp(block, out);
  return out;
}

int ceil_log2(int64_t n) {
  if (n <= 1) return 0;
  return std::bit_width(static_cast<uint64_t>(n - 1));
}

void check_dot_capacity(int width, int64_t n) {
  if (n < 1) throw std::invalid_argument("bfp_dot: empty reduction");
  if (2 * width + ceil_log2(n) > 64)
    throw std::invalid_argument("bfp_dot: accumulator capacity exceeded (2*" +
                                std::to_string(width) + " + ceil_log2(" + std::to_string(n) +
                                ") > 64)");
}

double bfp_dot(const BfpBlock& a, const BfpBlock& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("bfp_dot: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  if (a.width() != b.width())
    throw std::invalid_argument("bfp_dot: width mismatch (" + std::to_string(a.width()) +
                                " vs " + std::to_string(b.width()) + ")");
  check_dot_capacity(a.width(), a.size());

  const auto ma = a.mantissas();
  const auto mb = b.mantissas();
  int64_t acc = 0;
  for (size_t i = 0; i < ma.size(); ++i)
    acc += static_cast<int64_t>(ma[i]) * static_cast<int64_t>(mb[i]);
  return std::ldexp(static_cast<double>(acc),
                    a.exponent() + b.exponent() - 2 * (a.width() - 1));
}

uint64_t bfp_conversion_count() { return g_conversions.load(std::memory_order_relaxed); }

}  // namespace hbfp
