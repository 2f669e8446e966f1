#include "hbfp/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace hbfp {

DualWidthWeights::DualWidthWeights(const FpTensor& values, int wide_width, int narrow_width,
                                   int tile, const RoundingMode& master_mode,
                                   const RoundingMode& compute_mode)
    : source_shape_(values.shape()), wide_width_(wide_width), narrow_width_(narrow_width),
      tile_(tile) {
  if (values.rank() != 2 && values.rank() != 4)
    throw std::invalid_argument("DualWidthWeights: expected rank-2 or OIHW values, got shape " +
                                values.shape_str());
  if (wide_width < narrow_width)
    throw std::invalid_argument("DualWidthWeights: wide width " + std::to_string(wide_width) +
                                " below compute width " + std::to_string(narrow_width));
  retile(values, master_mode, compute_mode);
}

FpTensor DualWidthWeights::master_values() const { return master_->to_fp(); }

void DualWidthWeights::assign(const FpTensor& values, const RoundingMode& master_mode,
                              const RoundingMode& compute_mode) {
  if (values.numel() != rows() * cols())
    throw std::invalid_argument("DualWidthWeights: assigning " + std::to_string(values.numel()) +
                                " values to a " + std::to_string(rows()) + " x " +
                                std::to_string(cols()) + " matrix");
  retile(values, master_mode, compute_mode);
}

void DualWidthWeights::retile(const FpTensor& values, const RoundingMode& master_mode,
                              const RoundingMode& compute_mode) {
  const FpTensor src = values.reshaped(source_shape_);
  if (source_shape_.size() == 4) {
    master_ = tile_conv_weights(src, tile_, wide_width_, master_mode);
    compute_ = tile_conv_weights(master_->to_fp().reshaped(source_shape_), tile_, narrow_width_,
                                 compute_mode);
  } else {
    master_ = tile_matrix(src, tile_, wide_width_, master_mode);
    compute_ = tile_matrix(master_->to_fp(), tile_, narrow_width_, compute_mode);
  }
}

FpTensor& OptimizerState::velocity_for(const std::string& name,
                                       const std::vector<int64_t>& shape) {
  auto it = velocity.find(name);
  if (it == velocity.end()) it = velocity.emplace(name, FpTensor(shape)).first;
  if (it->second.shape() != shape)
    throw std::invalid_argument("OptimizerState: velocity shape changed for " + name);
  return it->second;
}

void sgd_momentum_step(std::span<double> weights, std::span<const double> grad,
                       std::span<double> velocity, double lr, double momentum,
                       double weight_decay) {
  if (weights.size() != grad.size() || weights.size() != velocity.size())
    throw std::invalid_argument("sgd_momentum_step: size mismatch");
  for (size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i] + weight_decay * weights[i];
    weights[i] -= lr * velocity[i];
  }
}

void shell_update(DualWidthWeights& weights, const FpTensor& grad, OptimizerState& opt,
                  const std::string& name, const RoundingMode& master_mode,
                  const RoundingMode& compute_mode) {
  if (!weights.valid()) throw std::invalid_argument("shell_update: uninitialized weights");
  if (grad.numel() != weights.rows() * weights.cols())
    throw std::invalid_argument("shell_update: gradient shape " + grad.shape_str() + " for " +
                                name + ", expected " + std::to_string(weights.rows()) + " x " +
                                std::to_string(weights.cols()));
  for (const double g : grad.values())
    if (!std::isfinite(g))
      throw std::runtime_error("shell_update: non-finite gradient in " + name);

  FpTensor vals = weights.master_values();
  FpTensor& vel = opt.velocity_for(name, vals.shape());
  sgd_momentum_step(vals.values(), grad.values(), vel.values(), opt.lr, opt.momentum,
                    opt.weight_decay);
  weights.assign(vals, master_mode, compute_mode);
}

}  // namespace hbfp
