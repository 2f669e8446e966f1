#pragma once

#include <cstdint>

#include "hbfp/tensor.hpp"
#include "hbfp/tiled.hpp"

namespace hbfp {

struct MatmulStats {
  int64_t fp_adds = 0;  // inter-strip floating-point additions performed
};

// Tiled BFP matrix product: within each tile strip the dot is pure integer
// arithmetic; strip results are accumulated in floating point in ascending
// strip order, so outputs are reproducible across runs and worker counts.
// `a` must be blocked per row.
FpTensor bfp_matmul(const RowBlockedMatrix& a, const BfpTiledMatrix& b,
                    MatmulStats* stats = nullptr);

// out(i,j) = mantissa_u[i] * mantissa_v[j] scaled by 2^(e_u+e_v-2(w-1)).
// One integer multiply per element, one scale application.
FpTensor bfp_outer_product(const BfpBlock& u, const BfpBlock& v);

// acc(i,j) += outer product, same semantics. Used to accumulate per-input
// weight gradients in floating point.
void accumulate_outer_product(FpTensor& acc, const BfpBlock& u, const BfpBlock& v);

struct ConvGeometry {
  int64_t kh = 1, kw = 1;
  int64_t stride = 1;
  int64_t pad = 0;
};

int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad);

// Unrolls NCHW input patches into a (N*outH*outW) x (C*kh*kw) matrix,
// zero-padded. Row order is (n, oy, ox); column order is (c, ky, kx).
FpTensor im2col(const FpTensor& x, const ConvGeometry& g);

// Adjoint of im2col: scatter-adds patch columns back into an NCHW tensor.
FpTensor col2im(const FpTensor& cols, int64_t n, int64_t c, int64_t h, int64_t w,
                const ConvGeometry& g);

// Convolution via im2col lowering. `weights` is the (out-channels) x
// (in*kh*kw) tiled matrix from tile_conv_weights. Activations are converted
// per patch row at the weights' width.
FpTensor conv2d_bfp(const FpTensor& x, const BfpTiledMatrix& weights, const ConvGeometry& g,
                    const RoundingMode& mode);

}  // namespace hbfp
