#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hbfp/tensor.hpp"

namespace hbfp {

// Features plus integer labels with a disjoint, covering train/validation
// split. Features are (N x dim) for point datasets and (N x C x H x W) for
// images.
struct Dataset {
  FpTensor features;
  std::vector<int> labels;
  std::vector<int64_t> train_indices, val_indices;
  int classes = 0;

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  int64_t sample_numel() const { return size() == 0 ? 0 : features.numel() / size(); }

  // Copies the selected samples into a dense batch tensor (same trailing
  // shape as features).
  FpTensor gather(std::span<const int64_t> idx) const;
  std::vector<int> gather_labels(std::span<const int64_t> idx) const;
};

// Gaussian clusters around deterministic centers on a circle (first two
// coordinates; higher dims jitter around 0). Labels round-robin, split 80/20
// after a seeded shuffle.
Dataset gen_blobs(int64_t n, int classes, int64_t dim, double spread, uint32_t seed);

// Interleaved Archimedean spirals in 2-D with Gaussian angular noise; the
// standard nonlinearly separable benchmark. Split 80/20 after a seeded
// shuffle.
Dataset gen_spirals(int64_t n, int classes, double noise, uint32_t seed);

// Big-endian IDX image + label files (magic 0x00000803 / 0x00000801).
// Pixels are scaled to [0,1]; features come out (N x 1 x H x W). The last
// val_fraction of the file order becomes the validation split.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 double val_fraction = 0.2);

// Writes a dataset's samples in IDX format (the inverse fixture for
// load_idx); values are clamped to [0,1] and stored as rounded bytes.
void write_idx(const std::string& images_path, const std::string& labels_path,
               const FpTensor& images, std::span<const int> labels);

}  // namespace hbfp
