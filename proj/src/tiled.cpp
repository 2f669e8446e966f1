#include "hbfp/tiled.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hbfp {

namespace {

// Level tags keep per-tile, per-row and per-column derived streams disjoint.
constexpr uint64_t kTileStream = 1;
constexpr uint64_t kRowStream = 2;
constexpr uint64_t kColStream = 3;

void check_2d(const FpTensor& m, const char* who) {
  if (m.rank() != 2) throw std::invalid_argument(std::string(who) + ": expected 2-D tensor");
  if (m.numel() == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

BfpTiledMatrix tile_rectangular(const FpTensor& m, int64_t tile_rows, int64_t tile_cols,
                                int declared_tile, int width, const RoundingMode& mode) {
  const int64_t rows = m.dim(0), cols = m.dim(1);
  const int64_t grid_rows = ceil_div(rows, tile_rows);
  const int64_t grid_cols = ceil_div(cols, tile_cols);

  std::vector<BfpBlock> blocks;
  blocks.reserve(static_cast<size_t>(grid_rows * grid_cols));
  std::vector<double> buf;
  for (int64_t tr = 0; tr < grid_rows; ++tr) {
    for (int64_t tc = 0; tc < grid_cols; ++tc) {
      const int64_t r0 = tr * tile_rows, c0 = tc * tile_cols;
      const int64_t rext = std::min(tile_rows, rows - r0);
      const int64_t cext = std::min(tile_cols, cols - c0);
      buf.resize(static_cast<size_t>(rext * cext));
      for (int64_t r = 0; r < rext; ++r)
        for (int64_t c = 0; c < cext; ++c)
          buf[static_cast<size_t>(r * cext + c)] = m(r0 + r, c0 + c);
      try {
        blocks.push_back(
            fp_to_bfp(buf, width, mode.split(tr * grid_cols + tc, kTileStream)));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("tile (" + std::to_string(tr) + "," + std::to_string(tc) +
                                    "): " + e.what());
      }
    }
  }
  return BfpTiledMatrix(rows, cols, tile_rows, tile_cols, declared_tile, width,
                        std::move(blocks));
}

}  // namespace

BfpTiledMatrix::BfpTiledMatrix(int64_t rows, int64_t cols, int64_t tile_rows, int64_t tile_cols,
                               int declared_tile, int width, std::vector<BfpBlock> blocks)
    : rows_(rows),
      cols_(cols),
      tile_rows_(tile_rows),
      tile_cols_(tile_cols),
      tile_(declared_tile),
      width_(width),
      grid_rows_(ceil_div(rows, tile_rows)),
      grid_cols_(ceil_div(cols, tile_cols)),
      blocks_(std::move(blocks)) {
  if (rows_ < 1 || cols_ < 1 || tile_rows_ < 1 || tile_cols_ < 1)
    throw std::invalid_argument("BfpTiledMatrix: invalid dimensions");
  if (static_cast<int64_t>(blocks_.size()) != grid_rows_ * grid_cols_)
    throw std::invalid_argument("BfpTiledMatrix: block grid size mismatch");
  for (int64_t tr = 0; tr < grid_rows_; ++tr)
    for (int64_t tc = 0; tc < grid_cols_; ++tc) {
      const BfpBlock& b = block(tr, tc);
      if (b.size() != tile_row_extent(tr) * tile_col_extent(tc))
        throw std::invalid_argument("BfpTiledMatrix: block length mismatch at tile (" +
                                    std::to_string(tr) + "," + std::to_string(tc) + ")");
      if (b.width() != width_)
        throw std::invalid_argument("BfpTiledMatrix: block width mismatch");
    }
}

double BfpTiledMatrix::element(int64_t i, int64_t j) const {
  const int64_t tr = i / tile_rows_, tc = j / tile_cols_;
  const int64_t r = i - tr * tile_rows_, c = j - tc * tile_cols_;
  return block(tr, tc).element(r * tile_col_extent(tc) + c);
}

FpTensor BfpTiledMatrix::to_fp() const {
  FpTensor out({rows_, cols_});
  for (int64_t tr = 0; tr < grid_rows_; ++tr) {
    for (int64_t tc = 0; tc < grid_cols_; ++tc) {
      const BfpBlock& b = block(tr, tc);
      const std::vector<double> vals = bfp_to_fp(b);
      const int64_t r0 = tr * tile_rows_, c0 = tc * tile_cols_;
      const int64_t rext = tile_row_extent(tr), cext = tile_col_extent(tc);
      for (int64_t r = 0; r < rext; ++r)
        for (int64_t c = 0; c < cext; ++c)
          out(r0 + r, c0 + c) = vals[static_cast<size_t>(r * cext + c)];
    }
  }
  return out;
}

RowBlockedMatrix::RowBlockedMatrix(int64_t rows, int64_t cols, BlockOrientation orientation,
                                   int width, std::vector<BfpBlock> blocks)
    : rows_(rows), cols_(cols), orientation_(orientation), width_(width), blocks_(std::move(blocks)) {
  const int64_t expected = orientation_ == BlockOrientation::PerRow ? rows_ : cols_;
  const int64_t length = orientation_ == BlockOrientation::PerRow ? cols_ : rows_;
  if (static_cast<int64_t>(blocks_.size()) != expected)
    throw std::invalid_argument("RowBlockedMatrix: block count mismatch");
  for (const BfpBlock& b : blocks_) {
    if (b.size() != length) throw std::invalid_argument("RowBlockedMatrix: block length mismatch");
    if (b.width() != width_) throw std::invalid_argument("RowBlockedMatrix: block width mismatch");
  }
}

FpTensor RowBlockedMatrix::to_fp() const {
  FpTensor out({rows_, cols_});
  if (orientation_ == BlockOrientation::PerRow) {
    for (int64_t i = 0; i < rows_; ++i) bfp_to_fp(block(i), out.row(i));
  } else {
    for (int64_t j = 0; j < cols_; ++j) {
      const std::vector<double> vals = bfp_to_fp(block(j));
      for (int64_t i = 0; i < rows_; ++i) out(i, j) = vals[static_cast<size_t>(i)];
    }
  }
  return out;
}

BfpTiledMatrix tile_matrix(const FpTensor& m, int tile, int width, const RoundingMode& mode) {
  check_2d(m, "tile_matrix");
  if (tile < 0) throw std::invalid_argument("tile_matrix: negative tile size");
  const int64_t tr = tile == kUntiled ? m.dim(0) : tile;
  const int64_t tc = tile == kUntiled ? m.dim(1) : tile;
  return tile_rectangular(m, tr, tc, tile, width, mode);
}

BfpTiledMatrix tile_conv_weights(const FpTensor& w, int tile, int width,
                                 const RoundingMode& mode) {
  if (w.rank() != 4) throw std::invalid_argument("tile_conv_weights: expected OIHW tensor");
  const int64_t out_ch = w.dim(0), in_ch = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const FpTensor flat = w.reshaped({out_ch, in_ch * kh * kw});
  if (tile < 0) throw std::invalid_argument("tile_conv_weights: negative tile size");
  const int64_t tr = tile == kUntiled ? out_ch : tile;
  const int64_t tc = (tile == kUntiled ? in_ch : tile) * kh * kw;
  return tile_rectangular(flat, tr, tc, tile, width, mode);
}

RowBlockedMatrix row_block(const FpTensor& m, BlockOrientation orientation, int width,
                           const RoundingMode& mode) {
  check_2d(m, "row_block");
  const int64_t rows = m.dim(0), cols = m.dim(1);
  std::vector<BfpBlock> blocks;
  if (orientation == BlockOrientation::PerRow) {
    blocks.reserve(static_cast<size_t>(rows));
    for (int64_t i = 0; i < rows; ++i)
      blocks.push_back(fp_to_bfp(m.row(i), width, mode.split(i, kRowStream)));
  } else {
    blocks.reserve(static_cast<size_t>(cols));
    std::vector<double> buf(static_cast<size_t>(rows));
    for (int64_t j = 0; j < cols; ++j) {
      for (int64_t i = 0; i < rows; ++i) buf[static_cast<size_t>(i)] = m(i, j);
      blocks.push_back(fp_to_bfp(buf, width, mode.split(j, kColStream)));
    }
  }
  return RowBlockedMatrix(rows, cols, orientation, width, std::move(blocks));
}

BfpTiledMatrix transposed(const BfpTiledMatrix& m) {
  std::vector<BfpBlock> blocks;
  blocks.reserve(static_cast<size_t>(m.block_count()));
  for (int64_t tc = 0; tc < m.grid_cols(); ++tc) {
    for (int64_t tr = 0; tr < m.grid_rows(); ++tr) {
      const BfpBlock& b = m.block(tr, tc);
      const int64_t rext = m.tile_row_extent(tr), cext = m.tile_col_extent(tc);
      std::vector<int32_t> ms(static_cast<size_t>(rext * cext));
      for (int64_t r = 0; r < rext; ++r)
        for (int64_t c = 0; c < cext; ++c)
          ms[static_cast<size_t>(c * rext + r)] = b.mantissa(r * cext + c);
      blocks.emplace_back(std::move(ms), b.exponent(), b.width());
    }
  }
  return BfpTiledMatrix(m.cols(), m.rows(), m.tile_cols(), m.tile_rows(), m.declared_tile(),
                        m.width(), std::move(blocks));
}

}  // namespace hbfp
