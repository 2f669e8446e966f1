#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbfp {

// Raised for malformed config files, unknown keys, bad values, or invalid
// combinations. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string mode = "hbfp";  // hbfp | fp32
  int w_narrow = 8;           // 4 | 8 | 12 | 16 | 24
  int w_wide = 16;            // 16 | 32
  int tile = 24;              // 1..1024, or 0 = untiled (one exponent per matrix)
  std::string rounding = "stochastic";  // nearest | stochastic
  uint32_t seed = 1;

  std::string model = "mlp";  // logreg | mlp | cnn
  std::vector<int64_t> hidden = {64, 64};

  std::string dataset = "spirals";  // blobs | spirals | idx
  uint32_t data_seed = 7;           // generators only; kept apart from `seed` so
                                    // seed sweeps train on identical data
  int64_t n = 2000;
  int classes = 3;
  int64_t dim = 2;      // blobs
  double spread = 1.0;  // blobs
  double noise = 0.05;  // spirals
  std::string idx_images, idx_labels;
  double val_fraction = 0.2;  // idx split

  int epochs = 10;
  int64_t batch = 32;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;

  bool fp32() const { return mode == "fp32"; }
  bool untiled() const { return tile == 0; }

  // hbfp8_16_t24_s1 / fp32_s1; untiled prints as t0.
  std::string config_id() const;
};

// Flat key=value file; '#' starts a comment, blank lines ignored.
ExperimentConfig parse_config_file(const std::string& path);

// Applies one "key=value" override (the --set / sweep-axis form).
void apply_override(ExperimentConfig& cfg, const std::string& kv);

// Range and combination checks; throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

}  // namespace hbfp
