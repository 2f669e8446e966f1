#include "hbfp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "hbfp/rng.hpp"

namespace hbfp {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr double kSpiralTurns = 1.75;
constexpr uint32_t kImagesMagic = 0x00000803u;
constexpr uint32_t kLabelsMagic = 0x00000801u;

void shuffled_split(int64_t n, uint32_t seed, std::vector<int64_t>& train,
                    std::vector<int64_t>& val) {
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  SplitMix64 g(derive_seed(seed, 0x5B11));
  for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[g.below(i)]);
  const int64_t n_val = n / 5;
  train.assign(idx.begin(), idx.end() - n_val);
  val.assign(idx.end() - n_val, idx.end());
}

void check_gen_sizes(int64_t n, int classes) {
  if (classes < 2 || n < classes)
    throw std::invalid_argument("dataset generator: need n >= classes >= 2, got n=" +
                                std::to_string(n) + " classes=" + std::to_string(classes));
}

uint32_t read_be32(const std::vector<unsigned char>& buf, size_t off, const std::string& path) {
  if (off + 4 > buf.size()) throw std::runtime_error("load_idx: truncated file " + path);
  return (static_cast<uint32_t>(buf[off]) << 24) | (static_cast<uint32_t>(buf[off + 1]) << 16) |
         (static_cast<uint32_t>(buf[off + 2]) << 8) | static_cast<uint32_t>(buf[off + 3]);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_idx: cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>());
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

void write_be32(std::ofstream& f, uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

FpTensor Dataset::gather(std::span<const int64_t> idx) const {
  std::vector<int64_t> shape = features.shape();
  shape[0] = static_cast<int64_t>(idx.size());
  FpTensor out(shape);
  const int64_t stride = sample_numel();
  const auto src = features.values();
  auto dst = out.values();
  for (size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= size())
      throw std::out_of_range("Dataset::gather: index " + std::to_string(idx[k]));
    std::copy_n(src.data() + idx[k] * stride, stride, dst.data() + static_cast<int64_t>(k) * stride);
  }
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const int64_t> idx) const {
  std::vector<int> out(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) out[k] = labels[static_cast<size_t>(idx[k])];
  return out;
}

Dataset gen_blobs(int64_t n, int classes, int64_t dim, double spread, uint32_t seed) {
  check_gen_sizes(n, classes);
  if (dim < 1) throw std::invalid_argument("gen_blobs: dim must be >= 1");
  if (spread < 0.0) throw std::invalid_argument("gen_blobs: spread must be >= 0");

  Dataset d;
  d.classes = classes;
  d.features = FpTensor({n, dim});
  d.labels.resize(static_cast<size_t>(n));
  SplitMix64 g(derive_seed(seed, 0xB10B));
  const double radius = 4.0;
  for (int64_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % classes);
    d.labels[static_cast<size_t>(i)] = k;
    const double theta = 2.0 * kPi * k / classes;
    auto row = d.features.row(i);
    for (int64_t j = 0; j < dim; ++j) {
      double center = 0.0;
      if (j == 0) center = radius * std::cos(theta);
      if (j == 1) center = radius * std::sin(theta);
      row[static_cast<size_t>(j)] = center + spread * g.gaussian();
    }
  }
  shuffled_split(n, seed, d.train_indices, d.val_indices);
  return d;
}

Dataset gen_spirals(int64_t n, int classes, double noise, uint32_t seed) {
  check_gen_sizes(n, classes);
  if (noise < 0.0) throw std::invalid_argument("gen_spirals: noise must be >= 0");

  Dataset d;
  d.classes = classes;
  d.features = FpTensor({n, 2});
  d.labels.resize(static_cast<size_t>(n));
  SplitMix64 g(derive_seed(seed, 0x59134));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t k = i % classes;
    const int64_t j = i / classes;
    // points with index k, k+classes, k+2*classes, ...
    const int64_t count_k = (n - 1 - k) / classes + 1;
    const double t = count_k > 1 ? static_cast<double>(j) / static_cast<double>(count_k - 1) : 0.0;
    const double r = 0.1 + 0.9 * t;
    const double phi = 2.0 * kPi * (kSpiralTurns * t + static_cast<double>(k) / classes);
    d.labels[static_cast<size_t>(i)] = static_cast<int>(k);
    auto row = d.features.row(i);
    row[0] = r * std::cos(phi) + noise * g.gaussian();
    row[1] = r * std::sin(phi) + noise * g.gaussian();
  }
  shuffled_split(n, seed, d.train_indices, d.val_indices);
  return d;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("load_idx: val_fraction must be in [0, 1)");

  const std::vector<unsigned char> ibuf = read_file(images_path);
  const uint32_t imagic = read_be32(ibuf, 0, images_path);
  if (imagic != kImagesMagic)
    throw std::runtime_error("load_idx: bad magic " + hex32(imagic) + " in " + images_path +
                             " (expected " + hex32(kImagesMagic) + ")");
  const int64_t n = read_be32(ibuf, 4, images_path);
  const int64_t h = read_be32(ibuf, 8, images_path);
  const int64_t w = read_be32(ibuf, 12, images_path);
  if (static_cast<int64_t>(ibuf.size()) < 16 + n * h * w)
    throw std::runtime_error("load_idx: truncated file " + images_path);

  const std::vector<unsigned char> lbuf = read_file(labels_path);
  const uint32_t lmagic = read_be32(lbuf, 0, labels_path);
  if (lmagic != kLabelsMagic)
    throw std::runtime_error("load_idx: bad magic " + hex32(lmagic) + " in " + labels_path +
                             " (expected " + hex32(kLabelsMagic) + ")");
  const int64_t nl = read_be32(lbuf, 4, labels_path);
  if (static_cast<int64_t>(lbuf.size()) < 8 + nl)
    throw std::runtime_error("load_idx: truncated file " + labels_path);
  if (nl != n)
    throw std::runtime_error("load_idx: " + std::to_string(n) + " images but " +
                             std::to_string(nl) + " labels");
  if (n < 1) throw std::runtime_error("load_idx: empty dataset in " + images_path);

  Dataset d;
  d.features = FpTensor({n, 1, h, w});
  auto dst = d.features.values();
  for (int64_t i = 0; i < n * h * w; ++i)
    dst[static_cast<size_t>(i)] = ibuf[static_cast<size_t>(16 + i)] / 255.0;
  d.labels.resize(static_cast<size_t>(n));
  int max_label = 0;
  for (int64_t i = 0; i < n; ++i) {
    d.labels[static_cast<size_t>(i)] = lbuf[static_cast<size_t>(8 + i)];
    max_label = std::max(max_label, d.labels[static_cast<size_t>(i)]);
  }
  d.classes = max_label + 1;

  const int64_t n_val = static_cast<int64_t>(val_fraction * static_cast<double>(n));
  for (int64_t i = 0; i < n - n_val; ++i) d.train_indices.push_back(i);
  for (int64_t i = n - n_val; i < n; ++i) d.val_indices.push_back(i);
  return d;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const FpTensor& images, std::span<const int> labels) {
  if (images.rank() != 4 || images.dim(1) != 1)
    throw std::invalid_argument("write_idx: expected (n x 1 x h x w) images, got shape " +
                                images.shape_str());
  if (static_cast<int64_t>(labels.size()) != images.dim(0))
    throw std::invalid_argument("write_idx: label count does not match image count");

  std::ofstream fi(images_path, std::ios::binary);
  if (!fi) throw std::runtime_error("write_idx: cannot open " + images_path);
  write_be32(fi, kImagesMagic);
  write_be32(fi, static_cast<uint32_t>(images.dim(0)));
  write_be32(fi, static_cast<uint32_t>(images.dim(2)));
  write_be32(fi, static_cast<uint32_t>(images.dim(3)));
  for (const double v : images.values()) {
    const double c = std::min(1.0, std::max(0.0, v));
    const unsigned char byte = static_cast<unsigned char>(std::lround(c * 255.0));
    fi.write(reinterpret_cast<const char*>(&byte), 1);
  }

  std::ofstream fl(labels_path, std::ios::binary);
  if (!fl) throw std::runtime_error("write_idx: cannot open " + labels_path);
  write_be32(fl, kLabelsMagic);
  write_be32(fl, static_cast<uint32_t>(labels.size()));
  for (const int label : labels) {
    if (label < 0 || label > 255)
      throw std::invalid_argument("write_idx: label " + std::to_string(label) +
                                  " does not fit a byte");
    const unsigned char byte = static_cast<unsigned char>(label);
    fl.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

}  // namespace hbfp
