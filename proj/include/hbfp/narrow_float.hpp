#pragma once

namespace hbfp {

// Nearest representable value of a sign/magnitude float with `mantissa_bits`
// significant bits (implicit leading 1 included) and a symmetric exponent
// range of width `exponent_bits`: e in [-(2^(eb-1)-1), 2^(eb-1)-1]. Overflow
// saturates to the largest finite value; underflow flushes to zero. No
// subnormals.
double quantize_narrow_float(double x, int mantissa_bits, int exponent_bits);

// Largest finite value of the format.
double narrow_float_max(int mantissa_bits, int exponent_bits);

}  // namespace hbfp
