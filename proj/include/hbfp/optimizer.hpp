#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hbfp/tensor.hpp"
#include "hbfp/tiled.hpp"

namespace hbfp {

// Weight storage at two mantissa widths: a wide master used only by the
// optimizer and a narrow compute copy used by every forward/backward dot
// product. The compute copy is always requantized from the dequantized
// master, never updated independently.
class DualWidthWeights {
 public:
  DualWidthWeights() = default;

  // `values` is a rank-2 (out x in) matrix for dense layers or a rank-4 OIHW
  // tensor for convolutions. Conv weights are lowered to (out) x (in*kh*kw)
  // and tiled so column boundaries land on whole kernel patches.
  DualWidthWeights(const FpTensor& values, int wide_width, int narrow_width, int tile,
                   const RoundingMode& master_mode, const RoundingMode& compute_mode);

  bool valid() const { return wide_width_ != 0; }
  int wide_width() const { return wide_width_; }
  int narrow_width() const { return narrow_width_; }
  int tile() const { return tile_; }
  int64_t rows() const { return master_->rows(); }
  int64_t cols() const { return master_->cols(); }

  const BfpTiledMatrix& master() const { return *master_; }
  const BfpTiledMatrix& compute() const { return *compute_; }

  // Dequantized master in matrix layout (rows x cols).
  FpTensor master_values() const;

  // Requantizes both copies from new FP values in matrix layout.
  void assign(const FpTensor& values, const RoundingMode& master_mode,
              const RoundingMode& compute_mode);

 private:
  void retile(const FpTensor& values, const RoundingMode& master_mode,
              const RoundingMode& compute_mode);

  std::vector<int64_t> source_shape_;  // rank 4 for conv weights
  int wide_width_ = 0, narrow_width_ = 0, tile_ = kUntiled;
  std::optional<BfpTiledMatrix> master_, compute_;
};

struct OptimizerState {
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::map<std::string, FpTensor> velocity;

  // Momentum buffer for a named parameter, created zeroed on first use.
  FpTensor& velocity_for(const std::string& name, const std::vector<int64_t>& shape);
};

// One SGD-with-momentum step, entirely in FP:
//   v <- momentum*v + g + weight_decay*w;  w <- w - lr*v
void sgd_momentum_step(std::span<double> weights, std::span<const double> grad,
                       std::span<double> velocity, double lr, double momentum,
                       double weight_decay = 0.0);

// The shell optimizer: dequantize the master copy, apply the FP update, then
// requantize both the master (wide) and compute (narrow) copies.
void shell_update(DualWidthWeights& weights, const FpTensor& grad, OptimizerState& opt,
                  const std::string& name, const RoundingMode& master_mode,
                  const RoundingMode& compute_mode);

}  // namespace hbfp
