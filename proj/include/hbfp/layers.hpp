#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hbfp/linalg.hpp"
#include "hbfp/optimizer.hpp"

namespace hbfp {

// Per-site stream roles. Every quantization site in a step draws from its own
// stochastic stream derived from (run seed, step, layer id, role), so results
// do not depend on evaluation order.
inline constexpr uint64_t kFwdActSite = 1;
inline constexpr uint64_t kBwdGradSite = 2;
inline constexpr uint64_t kMasterSite = 3;
inline constexpr uint64_t kComputeSite = 4;
inline constexpr uint64_t kInitSite = 5;
inline constexpr uint64_t kShuffleSite = 6;

struct QuantContext {
  RoundingMode base = RoundingMode::nearest_even();
  uint64_t step = 0;

  RoundingMode site(uint64_t layer_id, uint64_t role) const {
    return base.split(step, layer_id * 8 + role);
  }
};

struct QuantPolicy {
  bool fp32 = false;  // bypass all BFP conversions
  int w_narrow = 8;
  int w_wide = 16;
  int tile = 24;
};

// A trainable tensor. Weights of quantized layers live in DualWidthWeights;
// biases (and all weights in FP32 mode) are plain FP tensors.
struct Param {
  std::string name;
  int64_t site_id = 0;  // owning layer's id, for stream derivation
  bool quantized = false;
  FpTensor value;
  DualWidthWeights dual;
  FpTensor grad;

  FpTensor current_values() const { return quantized ? dual.master_values() : value; }
  void set_values(const FpTensor& v, const RoundingMode& master_mode,
                  const RoundingMode& compute_mode);
  void zero_grad();
};

class Layer {
 public:
  Layer(std::string name, int64_t id) : name_(std::move(name)), id_(id) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  int64_t id() const { return id_; }

  // `training` controls whether the cache for backward is retained.
  virtual FpTensor forward(const FpTensor& x, const QuantContext& q, bool training) = 0;
  virtual FpTensor backward(const FpTensor& dy, const QuantContext& q) = 0;
  virtual std::vector<Param*> params() { return {}; }

 protected:
  std::string name_;
  int64_t id_;
};

class DenseLayer : public Layer {
 public:
  // w0 is (out x in) in FP; quantized immediately unless policy.fp32.
  DenseLayer(std::string name, int64_t id, const FpTensor& w0, const QuantPolicy& policy);

  FpTensor forward(const FpTensor& x, const QuantContext& q, bool training) override;
  FpTensor backward(const FpTensor& dy, const QuantContext& q) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

  int64_t in_features() const { return in_; }
  int64_t out_features() const { return out_; }

 private:
  int64_t in_, out_;
  bool fp32_;
  Param weight_, bias_;
  std::optional<RowBlockedMatrix> cached_rb_;
  std::optional<FpTensor> cached_x_;  // FP32 path
};

class Conv2dLayer : public Layer {
 public:
  // w0 is OIHW in FP. Weight gradients are kept in the lowered
  // (out) x (in*kh*kw) layout.
  Conv2dLayer(std::string name, int64_t id, const FpTensor& w0, int64_t stride, int64_t pad,
              const QuantPolicy& policy);

  FpTensor forward(const FpTensor& x, const QuantContext& q, bool training) override;
  FpTensor backward(const FpTensor& dy, const QuantContext& q) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }

  const ConvGeometry& geometry() const { return geom_; }

 private:
  int64_t in_c_, out_c_;
  ConvGeometry geom_;
  bool fp32_;
  Param weight_, bias_;
  std::optional<RowBlockedMatrix> cached_rb_;
  std::optional<FpTensor> cached_cols_;  // FP32 path
  std::vector<int64_t> cached_in_shape_;
};

class ReluLayer : public Layer {
 public:
  ReluLayer(std::string name, int64_t id) : Layer(std::move(name), id) {}
  FpTensor forward(const FpTensor& x, const QuantContext& q, bool training) override;
  FpTensor backward(const FpTensor& dy, const QuantContext& q) override;

 private:
  std::vector<char> mask_;
  std::vector<int64_t> cached_shape_;
};

class FlattenLayer : public Layer {
 public:
  FlattenLayer(std::string name, int64_t id) : Layer(std::move(name), id) {}
  FpTensor forward(const FpTensor& x, const QuantContext& q, bool training) override;
  FpTensor backward(const FpTensor& dy, const QuantContext& q) override;

 private:
  std::vector<int64_t> cached_shape_;
};

// Mean softmax cross-entropy over the batch, max-subtracted for stability.
// When dlogits is non-null it receives d(loss)/d(logits), rows summing to 0.
double softmax_xent(const FpTensor& logits, std::span<const int> labels, FpTensor* dlogits);

}  // namespace hbfp
