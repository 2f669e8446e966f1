#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hbfp/config.hpp"
#include "hbfp/dataset.hpp"
#include "hbfp/model.hpp"
#include "hbfp/train.hpp"

namespace hbfp {

struct RunResult {
  std::string config_id;
  std::vector<EpochMetrics> metrics;
};

Dataset build_dataset(const ExperimentConfig& cfg);
ModelSpec build_model_spec(const ExperimentConfig& cfg, const Dataset& data);

// Validates, builds dataset + model, trains, returns per-epoch metrics.
RunResult run_experiment(const ExperimentConfig& cfg);

// Header `epoch,train_loss,val_metric,seconds,config_id`, one row per epoch.
void write_metrics_csv(std::ostream& out, const RunResult& result);

struct SweepAxis {
  std::string key;  // w_narrow | tile | w_wide | seed
  std::vector<std::string> values;
};

struct SweepPoint {
  std::string config_id;
  bool ok = false;
  bool has_metric = false;
  double final_val_metric = 0.0;
  std::string error;
};

// Cartesian product of the axes over the base config. Each point runs
// independently (optionally on `threads` workers) and writes
// <out_dir>/<config_id>.csv; a failed point is recorded and the rest
// continue. Points without a seed axis get seeds derived from
// (base seed, point index).
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                  const std::string& out_dir, int threads);

// Header `config_id,status,final_val_metric,detail`.
void write_sweep_summary(std::ostream& out, const std::vector<SweepPoint>& points);

// Exact bit accounting for one weight matrix: elements*width data bits plus
// 16 exponent bits per tile.
struct LayerMemory {
  std::string layer;
  int64_t rows = 0, cols = 0;
  int64_t elements = 0, tiles = 0;
  int64_t compute_bits = 0, master_bits = 0, fp32_bits = 0;
};

int64_t tile_count(int64_t rows, int64_t cols, int tile, bool conv_patch = false,
                   int64_t patch = 1);
std::vector<LayerMemory> memory_report(const ExperimentConfig& cfg);

// CSV: layer,rows,cols,elements,tiles,compute_bits,master_bits,fp32_bits,
// compute_reduction,master_ratio — plus a `total` row.
void write_memory_csv(std::ostream& out, const std::vector<LayerMemory>& rows);

}  // namespace hbfp
