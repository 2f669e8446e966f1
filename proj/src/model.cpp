#include "hbfp/model.hpp"

#include <cmath>
#include <stdexcept>

#include "hbfp/rng.hpp"

namespace hbfp {

LayerSpec LayerSpec::dense(int64_t in, int64_t out) {
  LayerSpec s;
  s.kind = Kind::Dense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv2d(int64_t in_c, int64_t out_c, int64_t kh, int64_t kw, int64_t stride,
                            int64_t pad) {
  LayerSpec s;
  s.kind = Kind::Conv2d;
  s.in_c = in_c;
  s.out_c = out_c;
  s.kh = kh;
  s.kw = kw;
  s.stride = stride;
  s.pad = pad;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = Kind::Relu;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = Kind::Flatten;
  return s;
}

namespace {

FpTensor uniform_he(std::vector<int64_t> shape, int64_t fan_in, SplitMix64& g) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  FpTensor t(std::move(shape));
  for (double& v : t.values()) v = g.uniform(-limit, limit);
  return t;
}

}  // namespace

Model::Model(const ModelSpec& spec, uint32_t init_seed) : spec_(spec) {
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    const int64_t id = static_cast<int64_t>(i);
    const std::string idx = std::to_string(i);
    SplitMix64 g(derive_seed(init_seed, static_cast<uint64_t>(id), kInitSite));
    switch (ls.kind) {
      case LayerSpec::Kind::Dense: {
        if (ls.in < 1 || ls.out < 1)
          throw std::invalid_argument("Model: dense layer " + idx + " has empty dimensions");
        FpTensor w0 = uniform_he({ls.out, ls.in}, ls.in, g);
        layers_.push_back(std::make_unique<DenseLayer>("dense" + idx, id, w0, spec.quant));
        break;
      }
      case LayerSpec::Kind::Conv2d: {
        if (ls.in_c < 1 || ls.out_c < 1 || ls.kh < 1 || ls.kw < 1)
          throw std::invalid_argument("Model: conv layer " + idx + " has empty dimensions");
        FpTensor w0 = uniform_he({ls.out_c, ls.in_c, ls.kh, ls.kw}, ls.in_c * ls.kh * ls.kw, g);
        layers_.push_back(std::make_unique<Conv2dLayer>("conv" + idx, id, w0, ls.stride, ls.pad,
                                                        spec.quant));
        break;
      }
      case LayerSpec::Kind::Relu:
        layers_.push_back(std::make_unique<ReluLayer>("relu" + idx, id));
        break;
      case LayerSpec::Kind::Flatten:
        layers_.push_back(std::make_unique<FlattenLayer>("flatten" + idx, id));
        break;
    }
  }
}

FpTensor Model::forward(const FpTensor& x, const QuantContext& q, bool training) {
  FpTensor cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, q, training);
  return cur;
}

FpTensor Model::backward(const FpTensor& dy, const QuantContext& q) {
  FpTensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur, q);
  return cur;
}

void Model::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_)
    for (Param* p : layer->params()) out.push_back(p);
  return out;
}

}  // namespace hbfp
