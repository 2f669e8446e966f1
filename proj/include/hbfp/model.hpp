#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hbfp/layers.hpp"

namespace hbfp {

struct LayerSpec {
  enum class Kind { Dense, Conv2d, Relu, Flatten };
  Kind kind = Kind::Dense;
  int64_t in = 0, out = 0;                       // dense
  int64_t in_c = 0, out_c = 0, kh = 0, kw = 0;   // conv
  int64_t stride = 1, pad = 0;

  static LayerSpec dense(int64_t in, int64_t out);
  static LayerSpec conv2d(int64_t in_c, int64_t out_c, int64_t kh, int64_t kw, int64_t stride,
                          int64_t pad);
  static LayerSpec relu();
  static LayerSpec flatten();
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  QuantPolicy quant;
};

// An ordered stack of layers with a softmax cross-entropy head. Parameters
// are initialized with uniform He-style scaling from a deterministic per-layer
// stream; quantized weights start from a NEAREST_EVEN quantization.
class Model {
 public:
  Model(const ModelSpec& spec, uint32_t init_seed);

  FpTensor forward(const FpTensor& x, const QuantContext& q, bool training = true);
  // Accumulates parameter gradients; returns the input gradient.
  FpTensor backward(const FpTensor& dy, const QuantContext& q);
  void zero_grads();

  std::vector<Param*> params();
  int64_t layer_count() const { return static_cast<int64_t>(layers_.size()); }
  Layer& layer(int64_t i) { return *layers_[static_cast<size_t>(i)]; }
  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace hbfp
