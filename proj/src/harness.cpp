#include "hbfp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

#include "hbfp/rng.hpp"

namespace hbfp {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize_csv(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "blobs")
    return gen_blobs(cfg.n, cfg.classes, cfg.dim, cfg.spread, cfg.data_seed);
  if (cfg.dataset == "spirals") return gen_spirals(cfg.n, cfg.classes, cfg.noise, cfg.data_seed);
  return load_idx(cfg.idx_images, cfg.idx_labels, cfg.val_fraction);
}

ModelSpec build_model_spec(const ExperimentConfig& cfg, const Dataset& data) {
  ModelSpec ms;
  ms.quant.fp32 = cfg.fp32();
  ms.quant.w_narrow = cfg.w_narrow;
  ms.quant.w_wide = cfg.w_wide;
  ms.quant.tile = cfg.tile;

  const bool image_input = data.features.rank() == 4;
  int64_t flat_dim = data.sample_numel();

  if (cfg.model == "cnn") {
    if (!image_input)
      throw ConfigError("cnn model needs image features, got shape " +
                        data.features.shape_str());
    const int64_t c = data.features.dim(1), h = data.features.dim(2), w = data.features.dim(3);
    ms.layers.push_back(LayerSpec::conv2d(c, 8, 3, 3, 2, 1));
    ms.layers.push_back(LayerSpec::relu());
    ms.layers.push_back(LayerSpec::conv2d(8, 16, 3, 3, 2, 1));
    ms.layers.push_back(LayerSpec::relu());
    ms.layers.push_back(LayerSpec::flatten());
    const int64_t oh = conv_out_dim(conv_out_dim(h, 3, 2, 1), 3, 2, 1);
    const int64_t ow = conv_out_dim(conv_out_dim(w, 3, 2, 1), 3, 2, 1);
    ms.layers.push_back(LayerSpec::dense(16 * oh * ow, data.classes));
    return ms;
  }

  if (image_input) ms.layers.push_back(LayerSpec::flatten());
  if (cfg.model == "logreg") {
    ms.layers.push_back(LayerSpec::dense(flat_dim, data.classes));
    return ms;
  }
  int64_t prev = flat_dim;
  for (const int64_t h : cfg.hidden) {
    ms.layers.push_back(LayerSpec::dense(prev, h));
    ms.layers.push_back(LayerSpec::relu());
    prev = h;
  }
  ms.layers.push_back(LayerSpec::dense(prev, data.classes));
  return ms;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Dataset data = build_dataset(cfg);
  const ModelSpec ms = build_model_spec(cfg, data);
  Model model(ms, cfg.seed);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch = cfg.batch;
  tc.lr = cfg.lr;
  tc.momentum = cfg.momentum;
  tc.weight_decay = cfg.weight_decay;
  tc.seed = cfg.seed;
  tc.stochastic = !cfg.fp32() && cfg.rounding == "stochastic";

  return RunResult{cfg.config_id(), train_model(model, data, tc)};
}

void write_metrics_csv(std::ostream& out, const RunResult& result) {
  out << "epoch,train_loss,val_metric,seconds,config_id\n";
  for (const EpochMetrics& m : result.metrics) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", m.seconds);
    out << m.epoch << ',' << fmt_double(m.train_loss) << ',' << fmt_double(m.val_metric) << ','
        << secs << ',' << result.config_id << '\n';
  }
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                  const std::string& out_dir, int threads) {
  if (axes.empty()) throw ConfigError("sweep needs at least one axis");
  std::set<std::string> seen_keys;
  int64_t total = 1;
  for (const SweepAxis& ax : axes) {
    if (ax.key != "w_narrow" && ax.key != "tile" && ax.key != "w_wide" && ax.key != "seed")
      throw ConfigError("sweep axis must be one of w_narrow, tile, w_wide, seed; got '" + ax.key +
                        "'");
    if (!seen_keys.insert(ax.key).second) throw ConfigError("duplicate sweep axis: " + ax.key);
    if (ax.values.empty()) throw ConfigError("sweep axis " + ax.key + " has no values");
    total *= static_cast<int64_t>(ax.values.size());
  }
  const bool seed_axis = seen_keys.count("seed") > 0;

  // Materialize every point config up front so bad values fail the whole
  // sweep before any training starts.
  std::vector<ExperimentConfig> points;
  points.reserve(static_cast<size_t>(total));
  for (int64_t i = 0; i < total; ++i) {
    ExperimentConfig cfg = base;
    int64_t rem = i;
    for (auto ax = axes.rbegin(); ax != axes.rend(); ++ax) {
      const int64_t k = rem % static_cast<int64_t>(ax->values.size());
      rem /= static_cast<int64_t>(ax->values.size());
      apply_override(cfg, ax->key + "=" + ax->values[static_cast<size_t>(k)]);
    }
    if (!seed_axis) cfg.seed = derive_seed(base.seed, static_cast<uint64_t>(i), 0x57EE9);
    points.push_back(std::move(cfg));
  }
  std::set<std::string> ids;
  for (const ExperimentConfig& cfg : points)
    if (!ids.insert(cfg.config_id()).second)
      throw ConfigError("sweep points collide on config id " + cfg.config_id() +
                        " (axes ignored in this mode?)");

  std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
  std::vector<SweepPoint> results(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      SweepPoint& sp = results[i];
      sp.config_id = points[i].config_id();
      try {
        const RunResult r = run_experiment(points[i]);
        const std::filesystem::path csv =
            std::filesystem::path(out_dir.empty() ? "." : out_dir) / (sp.config_id + ".csv");
        std::ofstream f(csv);
        if (!f) throw std::runtime_error("cannot open " + csv.string());
        write_metrics_csv(f, r);
        if (!r.metrics.empty()) {
          sp.final_val_metric = r.metrics.back().val_metric;
          sp.has_metric = true;
        }
        sp.ok = true;
      } catch (const std::exception& e) {
        sp.ok = false;
        sp.error = e.what();
      }
    }
  };

  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "config_id,status,final_val_metric,detail\n";
  for (const SweepPoint& p : points) {
    out << p.config_id << ',' << (p.ok ? "ok" : "error") << ','
        << (p.has_metric ? fmt_double(p.final_val_metric) : "") << ',' << sanitize_csv(p.error)
        << '\n';
  }
}

int64_t tile_count(int64_t rows, int64_t cols, int tile, bool conv_patch, int64_t patch) {
  if (tile == 0) return 1;
  const int64_t t = tile;
  const int64_t grid_rows = (rows + t - 1) / t;
  const int64_t col_units = conv_patch ? cols / patch : cols;
  const int64_t grid_cols = (col_units + t - 1) / t;
  return grid_rows * grid_cols;
}

std::vector<LayerMemory> memory_report(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Dataset data = build_dataset(cfg);
  const ModelSpec ms = build_model_spec(cfg, data);

  constexpr int64_t kExponentBits = 16;
  std::vector<LayerMemory> rows;
  for (size_t i = 0; i < ms.layers.size(); ++i) {
    const LayerSpec& ls = ms.layers[i];
    LayerMemory lm;
    if (ls.kind == LayerSpec::Kind::Dense) {
      lm.layer = "dense" + std::to_string(i);
      lm.rows = ls.out;
      lm.cols = ls.in;
      lm.tiles = tile_count(lm.rows, lm.cols, cfg.tile);
    } else if (ls.kind == LayerSpec::Kind::Conv2d) {
      lm.layer = "conv" + std::to_string(i);
      lm.rows = ls.out_c;
      lm.cols = ls.in_c * ls.kh * ls.kw;
      lm.tiles = tile_count(lm.rows, lm.cols, cfg.tile, true, ls.kh * ls.kw);
    } else {
      continue;
    }
    lm.elements = lm.rows * lm.cols;
    lm.compute_bits = lm.elements * cfg.w_narrow + lm.tiles * kExponentBits;
    lm.master_bits = lm.elements * cfg.w_wide + lm.tiles * kExponentBits;
    lm.fp32_bits = lm.elements * 32;
    rows.push_back(lm);
  }
  return rows;
}

void write_memory_csv(std::ostream& out, const std::vector<LayerMemory>& rows) {
  out << "layer,rows,cols,elements,tiles,compute_bits,master_bits,fp32_bits,"
         "compute_reduction,master_ratio\n";
  LayerMemory total;
  total.layer = "total";
  auto ratio_cols = [](const LayerMemory& m) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.6g,%.6g",
                  m.compute_bits ? static_cast<double>(m.fp32_bits) / m.compute_bits : 0.0,
                  m.fp32_bits ? static_cast<double>(m.master_bits) / m.fp32_bits : 0.0);
    return std::string(buf);
  };
  for (const LayerMemory& m : rows) {
    out << m.layer << ',' << m.rows << ',' << m.cols << ',' << m.elements << ',' << m.tiles << ','
        << m.compute_bits << ',' << m.master_bits << ',' << m.fp32_bits << ',' << ratio_cols(m)
        << '\n';
    total.elements += m.elements;
    total.tiles += m.tiles;
    total.compute_bits += m.compute_bits;
    total.master_bits += m.master_bits;
    total.fp32_bits += m.fp32_bits;
  }
  out << "total,,," << total.elements << ',' << total.tiles << ',' << total.compute_bits << ','
      << total.master_bits << ',' << total.fp32_bits << ',' << ratio_cols(total) << '\n';
}

}  // namespace hbfp
