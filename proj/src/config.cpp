#include "hbfp/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace hbfp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + v + "' for " + key);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + v + "' for " + key);
  }
}

uint32_t parse_u32(const std::string& key, const std::string& v) {
  const int64_t r = parse_int(key, v);
  if (r < 0 || r > 0xFFFFFFFFll) throw ConfigError("value out of range for " + key + ": " + v);
  return static_cast<uint32_t>(r);
}

std::vector<int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  size_t start = 0;
  while (start <= v.size()) {
    const size_t comma = v.find(',', start);
    const std::string item = trim(v.substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start));
    if (item.empty()) throw ConfigError("empty entry in list for " + key + ": '" + v + "'");
    out.push_back(parse_int(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") cfg.mode = lower(value);
  else if (key == "w_narrow") cfg.w_narrow = static_cast<int>(parse_int(key, value));
  else if (key == "w_wide") cfg.w_wide = static_cast<int>(parse_int(key, value));
  else if (key == "tile") {
    if (lower(value) == "untiled") cfg.tile = 0;
    else cfg.tile = static_cast<int>(parse_int(key, value));
  } else if (key == "rounding") cfg.rounding = lower(value);
  else if (key == "seed") cfg.seed = parse_u32(key, value);
  else if (key == "model") cfg.model = lower(value);
  else if (key == "hidden") cfg.hidden = parse_int_list(key, value);
  else if (key == "dataset") cfg.dataset = lower(value);
  else if (key == "data_seed") cfg.data_seed = parse_u32(key, value);
  else if (key == "n") cfg.n = parse_int(key, value);
  else if (key == "classes") cfg.classes = static_cast<int>(parse_int(key, value));
  else if (key == "dim") cfg.dim = parse_int(key, value);
  else if (key == "spread") cfg.spread = parse_double(key, value);
  else if (key == "noise") cfg.noise = parse_double(key, value);
  else if (key == "idx_images") cfg.idx_images = value;
  else if (key == "idx_labels") cfg.idx_labels = value;
  else if (key == "val_fraction") cfg.val_fraction = parse_double(key, value);
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch") cfg.batch = parse_int(key, value);
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "momentum") cfg.momentum = parse_double(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else throw ConfigError("unknown config key: " + key);
}

bool one_of(int v, std::initializer_list<int> allowed) {
  for (const int a : allowed)
    if (v == a) return true;
  return false;
}

}  // namespace

std::string ExperimentConfig::config_id() const {
  char buf[64];
  if (fp32()) {
    std::snprintf(buf, sizeof buf, "fp32_s%u", seed);
  } else {
    std::snprintf(buf, sizeof buf, "hbfp%d_%d_t%d_s%u", w_narrow, w_wide, tile, seed);
  }
  return buf;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& kv) {
  const size_t eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("bad override (expected key=value): '" + kv + "'");
  set_key(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.mode != "hbfp" && cfg.mode != "fp32")
    throw ConfigError("mode must be hbfp or fp32, got '" + cfg.mode + "'");
  if (!cfg.fp32()) {
    if (!one_of(cfg.w_narrow, {4, 8, 12, 16, 24}))
      throw ConfigError("w_narrow must be one of 4, 8, 12, 16, 24");
    if (!one_of(cfg.w_wide, {16, 32})) throw ConfigError("w_wide must be 16 or 32");
    if (cfg.w_wide < cfg.w_narrow)
      throw ConfigError("w_wide (" + std::to_string(cfg.w_wide) + ") must be >= w_narrow (" +
                        std::to_string(cfg.w_narrow) + ")");
    if (cfg.tile != 0 && (cfg.tile < 1 || cfg.tile > 1024))
      throw ConfigError("tile must be in [1, 1024] or untiled");
    if (cfg.rounding != "nearest" && cfg.rounding != "stochastic")
      throw ConfigError("rounding must be nearest or stochastic, got '" + cfg.rounding + "'");
  }
  if (cfg.seed == 0) throw ConfigError("seed must be nonzero");

  if (cfg.model != "logreg" && cfg.model != "mlp" && cfg.model != "cnn")
    throw ConfigError("model must be logreg, mlp, or cnn, got '" + cfg.model + "'");
  if (cfg.model == "mlp") {
    if (cfg.hidden.empty()) throw ConfigError("mlp model needs a nonempty hidden list");
    for (const int64_t h : cfg.hidden)
      if (h < 1) throw ConfigError("hidden sizes must be positive");
  }

  if (cfg.dataset != "blobs" && cfg.dataset != "spirals" && cfg.dataset != "idx")
    throw ConfigError("dataset must be blobs, spirals, or idx, got '" + cfg.dataset + "'");
  if (cfg.dataset == "idx") {
    if (cfg.idx_images.empty() || cfg.idx_labels.empty())
      throw ConfigError("idx dataset needs idx_images and idx_labels paths");
    if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0))
      throw ConfigError("val_fraction must be in [0, 1)");
  } else {
    if (cfg.classes < 2 || cfg.n < cfg.classes)
      throw ConfigError("generators need n >= classes >= 2");
    if (cfg.dataset == "blobs" && cfg.dim < 1) throw ConfigError("dim must be >= 1");
    if (cfg.spread < 0.0) throw ConfigError("spread must be >= 0");
    if (cfg.noise < 0.0) throw ConfigError("noise must be >= 0");
  }
  if (cfg.dataset != "idx" && cfg.model == "cnn")
    throw ConfigError("cnn model needs an image (idx) dataset");

  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch < 1) throw ConfigError("batch must be >= 1");
  if (!(std::isfinite(cfg.lr) && cfg.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(std::isfinite(cfg.weight_decay) && cfg.weight_decay >= 0.0))
    throw ConfigError("weight_decay must be >= 0");
}

}  // namespace hbfp
