#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "hbfp/dataset.hpp"
#include "hbfp/model.hpp"
#include "hbfp/train.hpp"
#include "oracles.hpp"

using namespace hbfp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("hbfp_data_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void push_be32(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v >> 24));
  buf.push_back(static_cast<uint8_t>(v >> 16));
  buf.push_back(static_cast<uint8_t>(v >> 8));
  buf.push_back(static_cast<uint8_t>(v));
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& buf) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(f.good());
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::vector<uint8_t> image_file(uint32_t magic, uint32_t n, uint32_t h, uint32_t w,
                                const std::vector<uint8_t>& pixels) {
  std::vector<uint8_t> buf;
  push_be32(buf, magic);
  push_be32(buf, n);
  push_be32(buf, h);
  push_be32(buf, w);
  buf.insert(buf.end(), pixels.begin(), pixels.end());
  return buf;
}

std::vector<uint8_t> label_file(uint32_t magic, uint32_t n, const std::vector<uint8_t>& labels) {
  std::vector<uint8_t> buf;
  push_be32(buf, magic);
  push_be32(buf, n);
  buf.insert(buf.end(), labels.begin(), labels.end());
  return buf;
}

template <typename E, typename F>
std::string thrown_message(F&& fn) {
  try {
    fn();
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

bool split_is_partition(const Dataset& d) {
  std::set<int64_t> seen;
  for (const int64_t i : d.train_indices) seen.insert(i);
  for (const int64_t i : d.val_indices) seen.insert(i);
  if (static_cast<int64_t>(seen.size()) != d.size()) return false;
  return *seen.begin() == 0 && *seen.rbegin() == d.size() - 1;
}

}  // namespace

TEST_CASE("load_idx decodes a hand-assembled fixture exactly") {
  TempDir dir("fixture");
  write_bytes(dir.file("imgs"),
              image_file(0x00000803u, 2, 2, 2, {0, 255, 128, 64, 255, 0, 0, 1}));
  write_bytes(dir.file("labels"), label_file(0x00000801u, 2, {1, 0}));

  const Dataset d = load_idx(dir.file("imgs"), dir.file("labels"), 0.5);
  REQUIRE_EQ(d.size(), 2);
  REQUIRE_EQ(d.features.rank(), 4);
  CHECK_EQ(d.features.dim(0), 2);
  CHECK_EQ(d.features.dim(1), 1);
  CHECK_EQ(d.features.dim(2), 2);
  CHECK_EQ(d.features.dim(3), 2);
  CHECK_EQ(d.classes, 2);
  CHECK_EQ(d.labels[0], 1);
  CHECK_EQ(d.labels[1], 0);

  const std::vector<double> want{0.0,       255.0 / 255, 128.0 / 255, 64.0 / 255,
                                 255.0 / 255, 0.0,       0.0,         1.0 / 255};
  for (int64_t i = 0; i < 8; ++i) CHECK_EQ(d.features[i], want[static_cast<size_t>(i)]);

  // the trailing half of file order becomes validation
  REQUIRE_EQ(d.train_indices.size(), 1);
  REQUIRE_EQ(d.val_indices.size(), 1);
  CHECK_EQ(d.train_indices[0], 0);
  CHECK_EQ(d.val_indices[0], 1);
  CHECK_EQ(d.sample_numel(), 4);
}

TEST_CASE("load_idx rejects malformed files with specific messages") {
  TempDir dir("errors");
  const std::vector<uint8_t> good_imgs =
      image_file(0x00000803u, 2, 2, 2, std::vector<uint8_t>(8, 7));
  const std::vector<uint8_t> good_labels = label_file(0x00000801u, 2, {0, 1});
  write_bytes(dir.file("imgs"), good_imgs);
  write_bytes(dir.file("labels"), good_labels);

  write_bytes(dir.file("badmagic"), image_file(0x00000802u, 2, 2, 2, std::vector<uint8_t>(8, 7)));
  const std::string m1 = thrown_message<std::runtime_error>(
      [&] { load_idx(dir.file("badmagic"), dir.file("labels")); });
  CHECK(m1.find("bad magic") != std::string::npos);
  CHECK(m1.find("0x00000802") != std::string::npos);

  std::vector<uint8_t> short_imgs = good_imgs;
  short_imgs.resize(short_imgs.size() - 3);
  write_bytes(dir.file("short"), short_imgs);
  CHECK(thrown_message<std::runtime_error>([&] {
          load_idx(dir.file("short"), dir.file("labels"));
        }).find("truncated") != std::string::npos);

  write_bytes(dir.file("threelabels"), label_file(0x00000801u, 3, {0, 1, 0}));
  CHECK(thrown_message<std::runtime_error>([&] {
          load_idx(dir.file("imgs"), dir.file("threelabels"));
        }).find("images but") != std::string::npos);

  CHECK(thrown_message<std::runtime_error>([&] {
          load_idx(dir.file("missing"), dir.file("labels"));
        }).find("cannot open") != std::string::npos);

  write_bytes(dir.file("empty_imgs"), image_file(0x00000803u, 0, 2, 2, {}));
  write_bytes(dir.file("empty_labels"), label_file(0x00000801u, 0, {}));
  CHECK(thrown_message<std::runtime_error>([&] {
          load_idx(dir.file("empty_imgs"), dir.file("empty_labels"));
        }).find("empty dataset") != std::string::npos);

  CHECK_THROWS_AS(load_idx(dir.file("imgs"), dir.file("labels"), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(load_idx(dir.file("imgs"), dir.file("labels"), -0.1), std::invalid_argument);
}

TEST_CASE("write_idx and load_idx round-trip byte-quantized pixels") {
  TempDir dir("roundtrip");
  SplitMix64 g(55);
  FpTensor imgs({5, 1, 3, 4});
  for (double& v : imgs.values()) v = g.uniform(-0.1, 1.1);  // exercise clamping
  const std::vector<int> labels{3, 0, 9, 1, 9};

  write_idx(dir.file("imgs"), dir.file("labels"), imgs, labels);
  const Dataset d = load_idx(dir.file("imgs"), dir.file("labels"), 0.2);

  REQUIRE_EQ(d.size(), 5);
  CHECK_EQ(d.classes, 10);
  for (size_t i = 0; i < labels.size(); ++i) CHECK_EQ(d.labels[i], labels[i]);
  for (int64_t i = 0; i < imgs.numel(); ++i) {
    const double clamped = std::min(1.0, std::max(0.0, imgs[i]));
    CHECK_EQ(d.features[i], std::lround(clamped * 255.0) / 255.0);
  }
  CHECK_EQ(d.val_indices.size(), 1);
  CHECK_EQ(d.val_indices[0], 4);

  CHECK_THROWS_AS(write_idx(dir.file("i2"), dir.file("l2"), imgs.reshaped({5, 12}), labels),
                  std::invalid_argument);
  const std::vector<int> big{3, 0, 9, 1, 256};
  CHECK_THROWS_AS(write_idx(dir.file("i3"), dir.file("l3"), imgs, big), std::invalid_argument);
  const std::vector<int> few{1, 2};
  CHECK_THROWS_AS(write_idx(dir.file("i4"), dir.file("l4"), imgs, few), std::invalid_argument);
}

TEST_CASE("gaussian blobs have round-robin labels on a deterministic circle") {
  const Dataset d = gen_blobs(101, 4, 3, 0.25, 9);
  REQUIRE_EQ(d.size(), 101);
  CHECK_EQ(d.features.dim(0), 101);
  CHECK_EQ(d.features.dim(1), 3);
  CHECK_EQ(d.classes, 4);
  for (int64_t i = 0; i < d.size(); ++i) CHECK_EQ(d.labels[static_cast<size_t>(i)], i % 4);

  CHECK_EQ(d.train_indices.size(), 101 - 101 / 5);
  CHECK_EQ(d.val_indices.size(), 101 / 5);
  CHECK(split_is_partition(d));

  // spread zero puts every sample exactly on its center
  const Dataset exact = gen_blobs(20, 4, 3, 0.0, 9);
  const double cx[4] = {4.0, 0.0, -4.0, 0.0};
  const double cy[4] = {0.0, 4.0, 0.0, -4.0};
  for (int64_t i = 0; i < 20; ++i) {
    const int k = static_cast<int>(i % 4);
    CHECK(std::fabs(exact.features(i, 0) - cx[k]) <= 1e-9);
    CHECK(std::fabs(exact.features(i, 1) - cy[k]) <= 1e-9);
    CHECK_EQ(exact.features(i, 2), 0.0);
  }

  const Dataset again = gen_blobs(101, 4, 3, 0.25, 9);
  const Dataset other = gen_blobs(101, 4, 3, 0.25, 10);
  bool differs = false;
  for (int64_t i = 0; i < d.features.numel(); ++i) {
    CHECK_EQ(d.features[i], again.features[i]);
    differs = differs || d.features[i] != other.features[i];
  }
  CHECK(differs);
  CHECK(d.train_indices == again.train_indices);

  CHECK_THROWS_AS(gen_blobs(1, 2, 2, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_blobs(10, 1, 2, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_blobs(10, 2, 0, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_blobs(10, 2, 2, -0.5, 1), std::invalid_argument);
}

TEST_CASE("noise-free spirals lie exactly on their parametric curves") {
  const int64_t n = 450;
  const int classes = 3;
  const Dataset d = gen_spirals(n, classes, 0.0, 12);
  REQUIRE_EQ(d.size(), n);
  CHECK_EQ(d.features.dim(1), 2);
  CHECK(split_is_partition(d));

  int counts[3] = {0, 0, 0};
  for (int64_t i = 0; i < n; ++i) {
    const int k = d.labels[static_cast<size_t>(i)];
    REQUIRE(k == static_cast<int>(i % classes));
    ++counts[k];

    const int64_t j = i / classes;
    const int64_t count_k = (n - 1 - k) / classes + 1;
    const double t = static_cast<double>(j) / static_cast<double>(count_k - 1);
    const double r = 0.1 + 0.9 * t;
    const double phi =
        2.0 * std::acos(-1.0) * (1.75 * t + static_cast<double>(k) / classes);
    CHECK(std::fabs(d.features(i, 0) - r * std::cos(phi)) <= 1e-9);
    CHECK(std::fabs(d.features(i, 1) - r * std::sin(phi)) <= 1e-9);

    const double radius = std::hypot(d.features(i, 0), d.features(i, 1));
    CHECK(radius >= 0.1 - 1e-9);
    CHECK(radius <= 1.0 + 1e-9);
  }
  CHECK_EQ(counts[0], 150);
  CHECK_EQ(counts[1], 150);
  CHECK_EQ(counts[2], 150);

  const Dataset noisy = gen_spirals(n, classes, 0.05, 12);
  const Dataset noisy2 = gen_spirals(n, classes, 0.05, 12);
  const Dataset other = gen_spirals(n, classes, 0.05, 13);
  bool differs = false;
  for (int64_t i = 0; i < noisy.features.numel(); ++i) {
    CHECK_EQ(noisy.features[i], noisy2.features[i]);
    differs = differs || noisy.features[i] != other.features[i];
  }
  CHECK(differs);

  CHECK_THROWS_AS(gen_spirals(100, 3, -0.01, 1), std::invalid_argument);
}

TEST_CASE("an FP32 MLP separates the spiral benchmark") {
  const Dataset d = gen_spirals(900, 3, 0.02, 7);

  ModelSpec ms;
  ms.layers = {LayerSpec::dense(2, 32), LayerSpec::relu(), LayerSpec::dense(32, 32),
               LayerSpec::relu(), LayerSpec::dense(32, 3)};
  ms.quant.fp32 = true;
  Model m(ms, 3);

  TrainConfig tc;
  tc.epochs = 200;
  tc.batch = 32;
  tc.lr = 0.1;
  tc.momentum = 0.9;
  tc.seed = 3;
  tc.stochastic = false;
  const std::vector<EpochMetrics> metrics = train_model(m, d, tc);
  REQUIRE_EQ(metrics.size(), 200);
  CHECK(evaluate_accuracy(m, d, d.train_indices, 64) >= 0.9);
}

TEST_CASE("gather copies rows and validates indices") {
  const Dataset d = gen_blobs(25, 3, 4, 0.5, 2);
  const std::vector<int64_t> idx{3, 0, 14};
  const FpTensor batch = d.gather(idx);
  REQUIRE_EQ(batch.dim(0), 3);
  REQUIRE_EQ(batch.dim(1), 4);
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t c = 0; c < 4; ++c) CHECK_EQ(batch(r, c), d.features(idx[static_cast<size_t>(r)], c));

  const std::vector<int> labels = d.gather_labels(idx);
  REQUIRE_EQ(labels.size(), 3);
  CHECK_EQ(labels[0], d.labels[3]);
  CHECK_EQ(labels[1], d.labels[0]);
  CHECK_EQ(labels[2], d.labels[14]);

  const std::vector<int64_t> bad{25};
  CHECK_THROWS_AS(d.gather(bad), std::out_of_range);
  const std::vector<int64_t> neg{-1};
  CHECK_THROWS_AS(d.gather(neg), std::out_of_range);

  // 4-D image features gather into stacked image batches
  TempDir dir("gather");
  SplitMix64 g(77);
  FpTensor imgs({4, 1, 2, 2});
  for (double& v : imgs.values()) v = g.uniform(0.0, 1.0);
  const std::vector<int> il{0, 1, 0, 1};
  write_idx(dir.file("i"), dir.file("l"), imgs, il);
  const Dataset id = load_idx(dir.file("i"), dir.file("l"));
  const std::vector<int64_t> pick{2, 1};
  const FpTensor ib = id.gather(pick);
  REQUIRE_EQ(ib.rank(), 4);
  CHECK_EQ(ib.dim(0), 2);
  for (int64_t j = 0; j < 4; ++j) {
    CHECK_EQ(ib[j], id.features[2 * 4 + j]);
    CHECK_EQ(ib[4 + j], id.features[1 * 4 + j]);
  }
}
