#include "hbfp/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace hbfp {

namespace {

void check_rank2(const FpTensor& t, const std::string& who, int64_t want_cols) {
  if (t.rank() != 2 || t.dim(1) != want_cols)
    throw std::invalid_argument(who + ": expected (batch x " + std::to_string(want_cols) +
                                "), got shape " + t.shape_str());
}

void add_bias_rows(FpTensor& y, const FpTensor& bias) {
  for (int64_t i = 0; i < y.dim(0); ++i) {
    auto row = y.row(i);
    for (int64_t j = 0; j < y.dim(1); ++j) row[static_cast<size_t>(j)] += bias[j];
  }
}

void add_into(FpTensor& acc, const FpTensor& t) {
  auto a = acc.values();
  auto b = t.values();
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

void Param::set_values(const FpTensor& v, const RoundingMode& master_mode,
                       const RoundingMode& compute_mode) {
  if (quantized) {
    dual.assign(v, master_mode, compute_mode);
  } else {
    if (v.numel() != value.numel())
      throw std::invalid_argument("Param " + name + ": set_values size mismatch");
    value = v.reshaped(value.shape());
  }
}

void Param::zero_grad() {
  for (double& g : grad.values()) g = 0.0;
}

DenseLayer::DenseLayer(std::string name, int64_t id, const FpTensor& w0,
                       const QuantPolicy& policy)
    : Layer(std::move(name), id), fp32_(policy.fp32) {
  if (w0.rank() != 2)
    throw std::invalid_argument(name_ + ": expected (out x in) weights, got shape " +
                                w0.shape_str());
  out_ = w0.dim(0);
  in_ = w0.dim(1);

  weight_.name = name_ + "/weight";
  weight_.site_id = id_;
  weight_.grad = FpTensor({out_, in_});
  if (fp32_) {
    weight_.value = w0;
  } else {
    weight_.quantized = true;
    weight_.dual = DualWidthWeights(w0, policy.w_wide, policy.w_narrow, policy.tile,
                                    RoundingMode::nearest_even(), RoundingMode::nearest_even());
  }

  bias_.name = name_ + "/bias";
  bias_.site_id = id_;
  bias_.value = FpTensor({out_});
  bias_.grad = FpTensor({out_});
}

FpTensor DenseLayer::forward(const FpTensor& x, const QuantContext& q, bool training) {
  check_rank2(x, name_, in_);
  FpTensor y;
  if (fp32_) {
    y = matmul_fp(x, transpose2d(weight_.value));
    if (training) cached_x_ = x;
  } else {
    RowBlockedMatrix rb = row_block(x, BlockOrientation::PerRow, weight_.dual.narrow_width(),
                                    q.site(id_, kFwdActSite));
    y = bfp_matmul(rb, transposed(weight_.dual.compute()));
    if (training) cached_rb_ = std::move(rb);
  }
  add_bias_rows(y, bias_.value);
  return y;
}

FpTensor DenseLayer::backward(const FpTensor& dy, const QuantContext& q) {
  check_rank2(dy, name_, out_);
  const int64_t batch = dy.dim(0);
  if (fp32_ ? !cached_x_ : !cached_rb_)
    throw std::logic_error(name_ + ": backward without forward");

  for (int64_t b = 0; b < batch; ++b)
    for (int64_t o = 0; o < out_; ++o) bias_.grad[o] += dy(b, o);

  if (fp32_) {
    if (cached_x_->dim(0) != batch)
      throw std::invalid_argument(name_ + ": dy batch differs from cached forward batch");
    add_into(weight_.grad, matmul_fp(transpose2d(dy), *cached_x_));
    return matmul_fp(dy, weight_.value);
  }

  if (cached_rb_->rows() != batch)
    throw std::invalid_argument(name_ + ": dy batch differs from cached forward batch");
  const RowBlockedMatrix dy_rb = row_block(dy, BlockOrientation::PerRow,
                                           weight_.dual.narrow_width(),
                                           q.site(id_, kBwdGradSite));
  FpTensor dx = bfp_matmul(dy_rb, weight_.dual.compute());
  for (int64_t b = 0; b < batch; ++b)
    accumulate_outer_product(weight_.grad, dy_rb.block(b), cached_rb_->block(b));
  return dx;
}

Conv2dLayer::Conv2dLayer(std::string name, int64_t id, const FpTensor& w0, int64_t stride,
                         int64_t pad, const QuantPolicy& policy)
    : Layer(std::move(name), id), fp32_(policy.fp32) {
  if (w0.rank() != 4)
    throw std::invalid_argument(name_ + ": expected OIHW weights, got shape " + w0.shape_str());
  out_c_ = w0.dim(0);
  in_c_ = w0.dim(1);
  geom_ = ConvGeometry{w0.dim(2), w0.dim(3), stride, pad};
  const int64_t ckk = in_c_ * geom_.kh * geom_.kw;

  weight_.name = name_ + "/weight";
  weight_.site_id = id_;
  weight_.grad = FpTensor({out_c_, ckk});
  if (fp32_) {
    weight_.value = w0.reshaped({out_c_, ckk});
  } else {
    weight_.quantized = true;
    weight_.dual = DualWidthWeights(w0, policy.w_wide, policy.w_narrow, policy.tile,
                                    RoundingMode::nearest_even(), RoundingMode::nearest_even());
  }

  bias_.name = name_ + "/bias";
  bias_.site_id = id_;
  bias_.value = FpTensor({out_c_});
  bias_.grad = FpTensor({out_c_});
}

FpTensor Conv2dLayer::forward(const FpTensor& x, const QuantContext& q, bool training) {
  if (x.rank() != 4 || x.dim(1) != in_c_)
    throw std::invalid_argument(name_ + ": expected (n x " + std::to_string(in_c_) +
                                " x h x w) input, got shape " + x.shape_str());
  FpTensor cols = im2col(x, geom_);
  FpTensor y2;
  if (fp32_) {
    y2 = matmul_fp(cols, transpose2d(weight_.value));
    if (training) cached_cols_ = std::move(cols);
  } else {
    RowBlockedMatrix rb = row_block(cols, BlockOrientation::PerRow,
                                    weight_.dual.narrow_width(), q.site(id_, kFwdActSite));
    y2 = bfp_matmul(rb, transposed(weight_.dual.compute()));
    if (training) cached_rb_ = std::move(rb);
  }
  add_bias_rows(y2, bias_.value);
  if (training) cached_in_shape_ = x.shape();

  const int64_t n = x.dim(0);
  const int64_t oh = conv_out_dim(x.dim(2), geom_.kh, geom_.stride, geom_.pad);
  const int64_t ow = conv_out_dim(x.dim(3), geom_.kw, geom_.stride, geom_.pad);
  FpTensor y({n, out_c_, oh, ow});
  int64_t r = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox, ++r)
        for (int64_t o = 0; o < out_c_; ++o) y(ni, o, oy, ox) = y2(r, o);
  return y;
}

FpTensor Conv2dLayer::backward(const FpTensor& dy, const QuantContext& q) {
  if (cached_in_shape_.empty()) throw std::logic_error(name_ + ": backward without forward");
  const int64_t n = cached_in_shape_[0], h = cached_in_shape_[2], w = cached_in_shape_[3];
  const int64_t oh = conv_out_dim(h, geom_.kh, geom_.stride, geom_.pad);
  const int64_t ow = conv_out_dim(w, geom_.kw, geom_.stride, geom_.pad);
  if (dy.rank() != 4 || dy.dim(0) != n || dy.dim(1) != out_c_ || dy.dim(2) != oh ||
      dy.dim(3) != ow)
    throw std::invalid_argument(name_ + ": gradient shape " + dy.shape_str() +
                                " does not match forward output");

  FpTensor dy2({n * oh * ow, out_c_});
  int64_t r = 0;
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox, ++r)
        for (int64_t o = 0; o < out_c_; ++o) dy2(r, o) = dy(ni, o, oy, ox);

  for (int64_t i = 0; i < dy2.dim(0); ++i)
    for (int64_t o = 0; o < out_c_; ++o) bias_.grad[o] += dy2(i, o);

  FpTensor dcols;
  if (fp32_) {
    dcols = matmul_fp(dy2, weight_.value);
    add_into(weight_.grad, matmul_fp(transpose2d(dy2), *cached_cols_));
  } else {
    const RowBlockedMatrix dy_rb = row_block(dy2, BlockOrientation::PerRow,
                                             weight_.dual.narrow_width(),
                                             q.site(id_, kBwdGradSite));
    dcols = bfp_matmul(dy_rb, weight_.dual.compute());
    for (int64_t i = 0; i < dy2.dim(0); ++i)
      accumulate_outer_product(weight_.grad, dy_rb.block(i), cached_rb_->block(i));
  }
  return col2im(dcols, n, in_c_, h, w, geom_);
}

FpTensor ReluLayer::forward(const FpTensor& x, const QuantContext&, bool training) {
  FpTensor y = x;
  if (training) {
    mask_.assign(static_cast<size_t>(x.numel()), 0);
    cached_shape_ = x.shape();
  }
  auto v = y.values();
  for (int64_t i = 0; i < y.numel(); ++i) {
    if (v[static_cast<size_t>(i)] > 0.0) {
      if (training) mask_[static_cast<size_t>(i)] = 1;
    } else {
      v[static_cast<size_t>(i)] = 0.0;
    }
  }
  return y;
}

FpTensor ReluLayer::backward(const FpTensor& dy, const QuantContext&) {
  if (cached_shape_.empty()) throw std::logic_error(name_ + ": backward without forward");
  if (dy.shape() != cached_shape_)
    throw std::invalid_argument(name_ + ": gradient shape " + dy.shape_str() +
                                " does not match forward input");
  FpTensor dx = dy;
  auto v = dx.values();
  for (size_t i = 0; i < v.size(); ++i)
    if (!mask_[i]) v[i] = 0.0;
  return dx;
}

FpTensor FlattenLayer::forward(const FpTensor& x, const QuantContext&, bool training) {
  if (x.rank() < 2) throw std::invalid_argument(name_ + ": input must have a batch dimension");
  if (training) cached_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
}

FpTensor FlattenLayer::backward(const FpTensor& dy, const QuantContext&) {
  if (cached_shape_.empty()) throw std::logic_error(name_ + ": backward without forward");
  return dy.reshaped(cached_shape_);
}

double softmax_xent(const FpTensor& logits, std::span<const int> labels, FpTensor* dlogits) {
  if (logits.rank() != 2)
    throw std::invalid_argument("softmax_xent: expected (batch x classes) logits, got shape " +
                                logits.shape_str());
  const int64_t batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != batch)
    throw std::invalid_argument("softmax_xent: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(batch));
  if (dlogits) *dlogits = FpTensor({batch, classes});

  double loss = 0.0;
  for (int64_t b = 0; b < batch; ++b) {
    const int y = labels[static_cast<size_t>(b)];
    if (y < 0 || y >= classes)
      throw std::invalid_argument("softmax_xent: label " + std::to_string(y) +
                                  " out of range [0, " + std::to_string(classes) + ")");
    const auto row = logits.row(b);
    double m = row[0];
    for (int64_t c = 1; c < classes; ++c) m = row[static_cast<size_t>(c)] > m ? row[static_cast<size_t>(c)] : m;
    double sum = 0.0;
    for (int64_t c = 0; c < classes; ++c) sum += std::exp(row[static_cast<size_t>(c)] - m);
    loss += m + std::log(sum) - row[static_cast<size_t>(y)];
    if (dlogits) {
      for (int64_t c = 0; c < classes; ++c) {
        const double p = std::exp(row[static_cast<size_t>(c)] - m) / sum;
        (*dlogits)(b, c) = (p - (c == y ? 1.0 : 0.0)) / static_cast<double>(batch);
      }
    }
  }
  return loss / static_cast<double>(batch);
}

}  // namespace hbfp
