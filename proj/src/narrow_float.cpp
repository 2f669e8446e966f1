#include "hbfp/narrow_float.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hbfp/rounding.hpp"

namespace hbfp {

namespace {

void check_format(int mantissa_bits, int exponent_bits) {
  if (mantissa_bits < 1 || mantissa_bits > 24)
    throw std::invalid_argument("quantize_narrow_float: mantissa_bits " +
                                std::to_string(mantissa_bits) + " outside [1, 24]");
  if (exponent_bits < 2 || exponent_bits > 8)
    throw std::invalid_argument("quantize_narrow_float: exponent_bits " +
                                std::to_string(exponent_bits) + " outside [2, 8]");
}

int max_exponent(int exponent_bits) { return (1 << (exponent_bits - 1)) - 1; }

}  // namespace

double narrow_float_max(int mantissa_bits, int exponent_bits) {
  check_format(mantissa_bits, exponent_bits);
  const int emax = max_exponent(exponent_bits);
  return (2.0 - std::ldexp(1.0, 1 - mantissa_bits)) * std::ldexp(1.0, emax);
}

double quantize_narrow_float(double x, int mantissa_bits, int exponent_bits) {
  check_format(mantissa_bits, exponent_bits);
  if (!std::isfinite(x))
    throw std::invalid_argument("quantize_narrow_float: non-finite input");
  if (x == 0.0) return 0.0;

  const int emax = max_exponent(exponent_bits);
  const int emin = -emax;
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double mag = std::fabs(x);

  int e = std::ilogb(mag);  // mag = f * 2^e with f in [1, 2)
  // Round the significand to mantissa_bits, half to even.
  int64_t q = round_nearest_even(std::ldexp(mag, mantissa_bits - 1 - e));
  if (q == (1ll << mantissa_bits)) {  // rounding carried out of [1, 2)
    q >>= 1;
    ++e;
  }
  if (e > emax) return sign * narrow_float_max(mantissa_bits, exponent_bits);
  if (e < emin) return 0.0;
  return sign * std::ldexp(static_cast<double>(q), e - (mantissa_bits - 1));
}

}  // namespace hbfp
