#pragma once

#include <cstdint>
#include <vector>

#include "hbfp/block.hpp"
#include "hbfp/tensor.hpp"

namespace hbfp {

// Tile size sentinel: a single shared exponent for the whole matrix.
inline constexpr int kUntiled = 0;

// A 2-D matrix partitioned into tiles, one BfpBlock (one shared exponent) per
// tile. Plain matrices use square T x T tiles; convolution weight matrices
// use T x (T*kh*kw) tiles so boundaries never split a kernel patch. Edge
// tiles are ragged. Blocks store their tile's elements row-major.
class BfpTiledMatrix {
 public:
  BfpTiledMatrix(int64_t rows, int64_t cols, int64_t tile_rows, int64_t tile_cols,
                 int declared_tile, int width, std::vector<BfpBlock> blocks);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t tile_rows() const { return tile_rows_; }
  int64_t tile_cols() const { return tile_cols_; }
  int declared_tile() const { return tile_; }
  bool untiled() const { return tile_ == kUntiled; }
  int width() const { return width_; }
  int64_t grid_rows() const { return grid_rows_; }
  int64_t grid_cols() const { return grid_cols_; }
  int64_t block_count() const { return static_cast<int64_t>(blocks_.size()); }

  const BfpBlock& block(int64_t tr, int64_t tc) const {
    return blocks_[static_cast<size_t>(tr * grid_cols_ + tc)];
  }

  // Actual extents of tile (tr, tc).
  int64_t tile_row_extent(int64_t tr) const {
    const int64_t r0 = tr * tile_rows_;
    return tile_rows_ < rows_ - r0 ? tile_rows_ : rows_ - r0;
  }
  int64_t tile_col_extent(int64_t tc) const {
    const int64_t c0 = tc * tile_cols_;
    return tile_cols_ < cols_ - c0 ? tile_cols_ : cols_ - c0;
  }

  // Exact dequantized value of element (i, j).
  double element(int64_t i, int64_t j) const;

  // Dequantizes the whole matrix.
  FpTensor to_fp() const;

 private:
  int64_t rows_, cols_;
  int64_t tile_rows_, tile_cols_;
  int tile_;
  int width_;
  int64_t grid_rows_, grid_cols_;
  std::vector<BfpBlock> blocks_;
};

enum class BlockOrientation { PerRow, PerColumn };

// A matrix with one shared exponent per row (activations: one per training
// input) or per column.
class RowBlockedMatrix {
 public:
  RowBlockedMatrix(int64_t rows, int64_t cols, BlockOrientation orientation, int width,
                   std::vector<BfpBlock> blocks);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  BlockOrientation orientation() const { return orientation_; }
  int width() const { return width_; }
  int64_t block_count() const { return static_cast<int64_t>(blocks_.size()); }
  const BfpBlock& block(int64_t i) const { return blocks_[static_cast<size_t>(i)]; }

  FpTensor to_fp() const;

 private:
  int64_t rows_, cols_;
  BlockOrientation orientation_;
  int width_;
  std::vector<BfpBlock> blocks_;
};

// Converts a 2-D tensor tile-by-tile; T = kUntiled means one block for the
// whole matrix. Stochastic streams are pre-split per tile from mode.seed, so
// the result is independent of traversal order.
BfpTiledMatrix tile_matrix(const FpTensor& m, int tile, int width, const RoundingMode& mode);

// Converts OIHW convolution weights to the (out-channels) x (in*kh*kw) matrix
// layout, tiling the two channel dimensions in T x T groups (tile boundaries
// land on whole kh*kw patches).
BfpTiledMatrix tile_conv_weights(const FpTensor& w, int tile, int width,
                                 const RoundingMode& mode);

// One block per row (or per column) of a 2-D tensor.
RowBlockedMatrix row_block(const FpTensor& m, BlockOrientation orientation, int width,
                           const RoundingMode& mode);

// Exact transpose: grid and per-tile mantissas are permuted, exponents and
// values unchanged. No requantization.
BfpTiledMatrix transposed(const BfpTiledMatrix& m);

}  // namespace hbfp
