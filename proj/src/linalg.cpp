#include "hbfp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hbfp {

FpTensor bfp_matmul(const RowBlockedMatrix& a, const BfpTiledMatrix& b, MatmulStats* stats) {
  if (a.orientation() != BlockOrientation::PerRow)
    throw std::invalid_argument("bfp_matmul: left operand must be blocked per row");
  if (a.cols() != b.rows())
    throw std::invalid_argument("bfp_matmul: inner dimensions differ: " +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  if (a.width() != b.width())
    throw std::invalid_argument("bfp_matmul: operand widths differ: " +
                                std::to_string(a.width()) + " vs " + std::to_string(b.width()));
  const int w = a.width();
  check_dot_capacity(w, std::min(b.tile_rows(), b.rows()));

  FpTensor out({a.rows(), b.cols()});
  std::vector<int64_t> isums(static_cast<size_t>(b.tile_cols()));

  for (int64_t i = 0; i < a.rows(); ++i) {
    const BfpBlock& arow = a.block(i);
    auto orow = out.row(i);
    // Strips are visited in ascending order, so the FP accumulation order per
    // output element is fixed regardless of how work is scheduled.
    for (int64_t tr = 0; tr < b.grid_rows(); ++tr) {
      const int64_t r0 = tr * b.tile_rows();
      const int64_t rext = b.tile_row_extent(tr);
      for (int64_t tc = 0; tc < b.grid_cols(); ++tc) {
        const int64_t c0 = tc * b.tile_cols();
        const int64_t cext = b.tile_col_extent(tc);
        const BfpBlock& tile = b.block(tr, tc);
        std::fill(isums.begin(), isums.begin() + cext, int64_t{0});
        for (int64_t lr = 0; lr < rext; ++lr) {
          const int64_t am = arow.mantissa(r0 + lr);
          if (am == 0) continue;
          const int32_t* tm = tile.mantissas().data() + lr * cext;
          for (int64_t lc = 0; lc < cext; ++lc) isums[static_cast<size_t>(lc)] += am * tm[lc];
        }
        const int shift = arow.exponent() + tile.exponent() - 2 * (w - 1);
        for (int64_t lc = 0; lc < cext; ++lc)
          orow[static_cast<size_t>(c0 + lc)] +=
              std::ldexp(static_cast<double>(isums[static_cast<size_t>(lc)]), shift);
      }
    }
  }
  if (stats) stats->fp_adds += a.rows() * b.cols() * (b.grid_rows() - 1);
  return out;
}

FpTensor bfp_outer_product(const BfpBlock& u, const BfpBlock& v) {
  FpTensor out({u.size(), v.size()});
  accumulate_outer_product(out, u, v);
  return out;
}

void accumulate_outer_product(FpTensor& acc, const BfpBlock& u, const BfpBlock& v) {
  if (acc.rank() != 2 || acc.dim(0) != u.size() || acc.dim(1) != v.size())
    throw std::invalid_argument("accumulate_outer_product: accumulator shape " + acc.shape_str() +
                                " does not match blocks " + std::to_string(u.size()) + " x " +
                                std::to_string(v.size()));
  const int shift = u.exponent() + v.exponent() - (u.width() - 1) - (v.width() - 1);
  for (int64_t i = 0; i < u.size(); ++i) {
    const int64_t um = u.mantissa(i);
    if (um == 0) continue;
    auto arow = acc.row(i);
    for (int64_t j = 0; j < v.size(); ++j) {
      const int64_t p = um * v.mantissa(j);
      if (p != 0) arow[static_cast<size_t>(j)] += std::ldexp(static_cast<double>(p), shift);
    }
  }
}

int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  if (in < 1 || k < 1 || stride < 1 || pad < 0)
    throw std::invalid_argument("conv_out_dim: bad geometry (in=" + std::to_string(in) +
                                " k=" + std::to_string(k) + " stride=" + std::to_string(stride) +
                                " pad=" + std::to_string(pad) + ")");
  if (in + 2 * pad < k)
    throw std::invalid_argument("conv_out_dim: kernel " + std::to_string(k) +
                                " exceeds padded input " + std::to_string(in + 2 * pad));
  return (in + 2 * pad - k) / stride + 1;
}

FpTensor im2col(const FpTensor& x, const ConvGeometry& g) {
  if (x.rank() != 4)
    throw std::invalid_argument("im2col: expected NCHW input, got shape " + x.shape_str());
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t oh = conv_out_dim(h, g.kh, g.stride, g.pad);
  const int64_t ow = conv_out_dim(w, g.kw, g.stride, g.pad);

  FpTensor out({n * oh * ow, c * g.kh * g.kw});
  int64_t r = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox, ++r) {
        auto orow = out.row(r);
        int64_t col = 0;
        for (int64_t ci = 0; ci < c; ++ci)
          for (int64_t ky = 0; ky < g.kh; ++ky) {
            const int64_t iy = oy * g.stride - g.pad + ky;
            for (int64_t kx = 0; kx < g.kw; ++kx, ++col) {
              const int64_t ix = ox * g.stride - g.pad + kx;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                orow[static_cast<size_t>(col)] = x(ni, ci, iy, ix);
            }
          }
      }
  return out;
}

FpTensor col2im(const FpTensor& cols, int64_t n, int64_t c, int64_t h, int64_t w,
                const ConvGeometry& g) {
  const int64_t oh = conv_out_dim(h, g.kh, g.stride, g.pad);
  const int64_t ow = conv_out_dim(w, g.kw, g.stride, g.pad);
  if (cols.rank() != 2 || cols.dim(0) != n * oh * ow || cols.dim(1) != c * g.kh * g.kw)
    throw std::invalid_argument("col2im: patch matrix shape " + cols.shape_str() +
                                " does not match geometry");

  FpTensor out({n, c, h, w});
  int64_t r = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox, ++r) {
        auto crow = cols.row(r);
        int64_t col = 0;
        for (int64_t ci = 0; ci < c; ++ci)
          for (int64_t ky = 0; ky < g.kh; ++ky) {
            const int64_t iy = oy * g.stride - g.pad + ky;
            for (int64_t kx = 0; kx < g.kw; ++kx, ++col) {
              const int64_t ix = ox * g.stride - g.pad + kx;
              if (iy >= 0 && iy < h && ix >= 0 && ix < w)
                out(ni, ci, iy, ix) += crow[static_cast<size_t>(col)];
            }
          }
      }
  return out;
}

FpTensor conv2d_bfp(const FpTensor& x, const BfpTiledMatrix& weights, const ConvGeometry& g,
                    const RoundingMode& mode) {
  if (x.rank() != 4)
    throw std::invalid_argument("conv2d_bfp: expected NCHW input, got shape " + x.shape_str());
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (weights.cols() != c * g.kh * g.kw)
    throw std::invalid_argument("conv2d_bfp: weight matrix has " + std::to_string(weights.cols()) +
                                " columns, input patches have " + std::to_string(c * g.kh * g.kw));
  const int64_t oh = conv_out_dim(h, g.kh, g.stride, g.pad);
  const int64_t ow = conv_out_dim(w, g.kw, g.stride, g.pad);
  const int64_t oc = weights.rows();

  const FpTensor cols = im2col(x, g);
  const RowBlockedMatrix rb = row_block(cols, BlockOrientation::PerRow, weights.width(), mode);
  const FpTensor y = bfp_matmul(rb, transposed(weights));

  FpTensor out({n, oc, oh, ow});
  int64_t r = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox, ++r)
        for (int64_t o = 0; o < oc; ++o) out(ni, o, oy, ox) = y(r, o);
  return out;
}

}  // namespace hbfp
