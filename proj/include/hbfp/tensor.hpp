#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hbfp {

// Dense row-major tensor of doubles. Carrier for everything on the FP side;
// all internal FP arithmetic is 64-bit.
class FpTensor {
 public:
  FpTensor() = default;
  explicit FpTensor(std::vector<int64_t> shape);
  FpTensor(std::vector<int64_t> shape, std::vector<double> data);

  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }

  // 2-D access
  double operator()(int64_t i, int64_t j) const {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }
  double& operator()(int64_t i, int64_t j) {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }

  // 4-D (NCHW) access
  double operator()(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  double& operator()(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  // Row i of a 2-D tensor.
  std::span<const double> row(int64_t i) const {
    return std::span<const double>(data_).subspan(static_cast<size_t>(i * shape_[1]),
                                                  static_cast<size_t>(shape_[1]));
  }
  std::span<double> row(int64_t i) {
    return std::span<double>(data_).subspan(static_cast<size_t>(i * shape_[1]),
                                            static_cast<size_t>(shape_[1]));
  }

  FpTensor reshaped(std::vector<int64_t> new_shape) const;
  bool same_shape(const FpTensor& other) const { return shape_ == other.shape_; }

  std::string shape_str() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

FpTensor transpose2d(const FpTensor& m);

// Plain FP64 matrix product, deterministic row-major accumulation. This is the
// reference path used when BFP is bypassed.
FpTensor matmul_fp(const FpTensor& a, const FpTensor& b);

}  // namespace hbfp
