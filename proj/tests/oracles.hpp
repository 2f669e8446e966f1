#pragma once

// Reference implementations used only by the tests. Everything here is
// written from the mathematical definitions with plain loops, FP64, and wide
// integers, independent of the library code paths it checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hbfp/block.hpp"
#include "hbfp/tensor.hpp"

namespace oracle {

// Marsaglia's three-line xorshift recurrence, transcribed directly.
inline uint32_t xorshift_step(uint32_t y) {
  y ^= y << 13;
  y ^= y >> 17;
  y ^= y << 5;
  return y;
}

// Block dot product with a 128-bit integer accumulator, scale applied once.
// Equal mantissa sums convert to double identically, so comparing the result
// to the library's 64-bit path with == proves the narrow accumulator never
// wrapped.
inline double dot_block_int128(const hbfp::BfpBlock& a, const hbfp::BfpBlock& b) {
  __int128 acc = 0;
  for (int64_t i = 0; i < a.size(); ++i)
    acc += static_cast<__int128>(a.mantissa(i)) * static_cast<__int128>(b.mantissa(i));
  const int shift = a.exponent() + b.exponent() - 2 * (a.width() - 1);
  return std::ldexp(static_cast<double>(acc), shift);
}

// FP64 dot over the dequantized element values.
inline double dot_block_fp64(const hbfp::BfpBlock& a, const hbfp::BfpBlock& b) {
  double s = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) s += a.element(i) * b.element(i);
  return s;
}

inline hbfp::FpTensor matmul_fp64(const hbfp::FpTensor& a, const hbfp::FpTensor& b) {
  const int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  hbfp::FpTensor out({n, m});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (int64_t t = 0; t < k; ++t) s += a(i, t) * b(t, j);
      out(i, j) = s;
    }
  return out;
}

inline hbfp::FpTensor transpose_fp64(const hbfp::FpTensor& m) {
  hbfp::FpTensor out({m.dim(1), m.dim(0)});
  for (int64_t i = 0; i < m.dim(0); ++i)
    for (int64_t j = 0; j < m.dim(1); ++j) out(j, i) = m(i, j);
  return out;
}

// Direct convolution from the definition: x is NCHW, w is OIHW.
inline hbfp::FpTensor conv2d_direct(const hbfp::FpTensor& x, const hbfp::FpTensor& w,
                                    int64_t stride, int64_t pad) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wid = x.dim(3);
  const int64_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const int64_t ow = (wid + 2 * pad - kw) / stride + 1;
  hbfp::FpTensor out({n, o, oh, ow});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t oc = 0; oc < o; ++oc)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double s = 0.0;
          for (int64_t ic = 0; ic < c; ++ic)
            for (int64_t ky = 0; ky < kh; ++ky)
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t iy = oy * stride + ky - pad;
                const int64_t ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wid) continue;
                s += x(b, ic, iy, ix) * w(oc, ic, ky, kx);
              }
          out(b, oc, oy, ox) = s;
        }
  return out;
}

// Dense backprop from the matrix-calculus identities for y = x W^T + b:
// dx = dy W, dW = dy^T x, db = column sums of dy.
struct DenseGrads {
  hbfp::FpTensor dx, dw, db;
};

inline DenseGrads dense_backprop(const hbfp::FpTensor& x, const hbfp::FpTensor& w,
                                 const hbfp::FpTensor& dy) {
  DenseGrads g;
  g.dx = matmul_fp64(dy, w);
  g.dw = matmul_fp64(transpose_fp64(dy), x);
  g.db = hbfp::FpTensor({dy.dim(1)});
  for (int64_t i = 0; i < dy.dim(0); ++i)
    for (int64_t j = 0; j < dy.dim(1); ++j) g.db[j] += dy(i, j);
  return g;
}

// Convolution backprop by direct loops over the definition. dw comes back in
// OIHW layout.
struct ConvGrads {
  hbfp::FpTensor dx, dw, db;
};

inline ConvGrads conv2d_backprop(const hbfp::FpTensor& x, const hbfp::FpTensor& w,
                                 const hbfp::FpTensor& dy, int64_t stride, int64_t pad) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wid = x.dim(3);
  const int64_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t oh = dy.dim(2), ow = dy.dim(3);
  ConvGrads g;
  g.dx = hbfp::FpTensor({n, c, h, wid});
  g.dw = hbfp::FpTensor({o, c, kh, kw});
  g.db = hbfp::FpTensor({o});
  for (int64_t b = 0; b < n; ++b)
    for (int64_t oc = 0; oc < o; ++oc)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          const double d = dy(b, oc, oy, ox);
          g.db[oc] += d;
          for (int64_t ic = 0; ic < c; ++ic)
            for (int64_t ky = 0; ky < kh; ++ky)
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t iy = oy * stride + ky - pad;
                const int64_t ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wid) continue;
                g.dx(b, ic, iy, ix) += d * w(oc, ic, ky, kx);
                g.dw(oc, ic, ky, kx) += d * x(b, ic, iy, ix);
              }
        }
  return g;
}

inline double max_abs_diff(const hbfp::FpTensor& a, const hbfp::FpTensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// ||a - b||_F / max(||b||_F, floor)
inline double rel_frobenius(const hbfp::FpTensor& a, const hbfp::FpTensor& b,
                            double floor = 1e-12) {
  double num = 0.0, den = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline double cosine(const hbfp::FpTensor& a, const hbfp::FpTensor& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-300);
}

// Nearest representable value of a small float with `m` significand bits
// (implicit leading one), symmetric exponent range +/-(2^(eb-1)-1),
// saturating overflow and flush-to-zero underflow. Found by enumerating
// every normal value; ties prefer the even mantissa, which across a binade
// boundary is the carried form. Magnitudes whose nearest-even rounding lands
// below the minimum normal (below 2^emin times 1 - 2^-(m+1)) flush to zero,
// since subnormals are not modeled. Practical for m <= 12.
inline double narrow_float_nearest(double x, int m, int eb) {
  if (x == 0.0) return 0.0;
  const int emax = (1 << (eb - 1)) - 1;
  const int emin = -emax;
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double mag = std::fabs(x);
  if (mag < std::ldexp(1.0, emin) * (1.0 - std::ldexp(1.0, -m - 1))) return 0.0;
  const double vmax = (2.0 - std::ldexp(1.0, 1 - m)) * std::ldexp(1.0, emax);
  if (mag > vmax) return sign * vmax;

  double best = 0.0, best_err = std::numeric_limits<double>::infinity();
  int64_t best_q = 1;
  for (int e = emin; e <= emax; ++e)
    for (int64_t q = int64_t{1} << (m - 1); q < (int64_t{1} << m); ++q) {
      const double v = std::ldexp(static_cast<double>(q), e - (m - 1));
      const double err = std::fabs(mag - v);
      if (err < best_err || (err == best_err && q % 2 == 0 && best_q % 2 != 0)) {
        best = v;
        best_err = err;
        best_q = q;
      }
    }
  return sign * best;
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace oracle
