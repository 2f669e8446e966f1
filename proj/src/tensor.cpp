#include "hbfp/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace hbfp {

namespace {

int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("FpTensor: negative dimension");
    n *= d;
  }
  return n;
}

}  // namespace

FpTensor::FpTensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_product(shape_)), 0.0) {}

FpTensor::FpTensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != static_cast<int64_t>(data_.size()))
    throw std::invalid_argument("FpTensor: data length does not match shape");
}

FpTensor FpTensor::reshaped(std::vector<int64_t> new_shape) const {
  if (shape_product(new_shape) != numel())
    throw std::invalid_argument("FpTensor::reshaped: element count mismatch");
  return FpTensor(std::move(new_shape), data_);
}

std::string FpTensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

FpTensor transpose2d(const FpTensor& m) {
  if (m.rank() != 2) throw std::invalid_argument("transpose2d: expected 2-D tensor");
  FpTensor out({m.dim(1), m.dim(0)});
  for (int64_t i = 0; i < m.dim(0); ++i)
    for (int64_t j = 0; j < m.dim(1); ++j) out(j, i) = m(i, j);
  return out;
}

FpTensor matmul_fp(const FpTensor& a, const FpTensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw std::invalid_argument("matmul_fp: expected 2-D tensors");
  if (a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul_fp: inner dimensions differ (" + a.shape_str() +
                                " vs " + b.shape_str() + ")");
  const int64_t rows = a.dim(0), inner = a.dim(1), cols = b.dim(1);
  FpTensor out({rows, cols});
  for (int64_t i = 0; i < rows; ++i) {
    for (int64_t k = 0; k < inner; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.values().data() + k * cols;
      double* orow = out.values().data() + i * cols;
      for (int64_t j = 0; j < cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

}  // namespace hbfp
