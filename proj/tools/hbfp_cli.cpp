#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hbfp/harness.hpp"

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("HBFP_LOG");
  if (!env) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

hbfp::ExperimentConfig load_config(const std::string& path,
                                   const std::vector<std::string>& overrides) {
  hbfp::ExperimentConfig cfg = hbfp::parse_config_file(path);
  for (const std::string& kv : overrides) hbfp::apply_override(cfg, kv);
  hbfp::validate_config(cfg);
  return cfg;
}

std::vector<hbfp::SweepAxis> parse_axes(const std::vector<std::string>& specs) {
  std::vector<hbfp::SweepAxis> axes;
  for (const std::string& spec : specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw hbfp::ConfigError("bad axis (expected key=v1,v2,...): '" + spec + "'");
    hbfp::SweepAxis ax;
    ax.key = spec.substr(0, eq);
    size_t start = eq + 1;
    while (start <= spec.size()) {
      const size_t comma = spec.find(',', start);
      const size_t end = comma == std::string::npos ? spec.size() : comma;
      if (end > start) ax.values.push_back(spec.substr(start, end - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (ax.values.empty()) throw hbfp::ConfigError("axis " + ax.key + " has no values");
    axes.push_back(std::move(ax));
  }
  return axes;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& out_dir) {
  const hbfp::ExperimentConfig cfg = load_config(config_path, overrides);
  const LogLevel lvl = log_level();
  if (lvl >= LogLevel::Info) std::cerr << "run " << cfg.config_id() << "\n";

  const hbfp::RunResult result = hbfp::run_experiment(cfg);
  if (lvl >= LogLevel::Debug)
    for (const hbfp::EpochMetrics& m : result.metrics)
      std::cerr << "  epoch " << m.epoch << " loss " << m.train_loss << " val " << m.val_metric
                << " (" << m.seconds << "s)\n";

  if (out_dir.empty()) {
    hbfp::write_metrics_csv(std::cout, result);
  } else {
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/" + result.config_id + ".csv";
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    hbfp::write_metrics_csv(f, result);
    if (lvl >= LogLevel::Info) std::cerr << "wrote " << path << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::vector<std::string>& axis_specs, const std::string& out_dir,
              int threads) {
  const hbfp::ExperimentConfig base = load_config(config_path, overrides);
  const std::vector<hbfp::SweepAxis> axes = parse_axes(axis_specs);
  const LogLevel lvl = log_level();

  const std::vector<hbfp::SweepPoint> points = hbfp::run_sweep(base, axes, out_dir, threads);
  if (lvl >= LogLevel::Info)
    for (const hbfp::SweepPoint& p : points)
      std::cerr << "point " << p.config_id << ": " << (p.ok ? "ok" : "error: " + p.error) << "\n";

  const std::string summary_path = out_dir + "/summary.csv";
  std::ofstream f(summary_path);
  if (!f) throw std::runtime_error("cannot open " + summary_path);
  hbfp::write_sweep_summary(f, points);
  hbfp::write_sweep_summary(std::cout, points);
  if (lvl >= LogLevel::Info) std::cerr << "wrote " << summary_path << "\n";
  return 0;
}

int cmd_report_memory(const std::string& config_path, const std::vector<std::string>& overrides) {
  const hbfp::ExperimentConfig cfg = load_config(config_path, overrides);
  hbfp::write_memory_csv(std::cout, hbfp::memory_report(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-floating-point training harness"};
  app.require_subcommand(1);

  std::string config_path, run_out_dir, sweep_out_dir = "sweep_out";
  std::vector<std::string> overrides, axis_specs;
  int threads = 1;

  CLI::App* run = app.add_subcommand("run", "train one configuration, emit per-epoch CSV");
  run->add_option("config", config_path, "key=value config file")->required();
  run->add_option("--set", overrides, "override a config key (key=value)");
  run->add_option("--out", run_out_dir, "write <config_id>.csv here instead of stdout");

  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep over config axes");
  sweep->add_option("config", config_path, "key=value config file")->required();
  sweep->add_option("--axis", axis_specs, "sweep axis (key=v1,v2,...)")->required();
  sweep->add_option("--set", overrides, "override a config key (key=value)");
  sweep->add_option("--out", sweep_out_dir, "output directory");
  sweep->add_option("--threads", threads, "parallel sweep points");

  CLI::App* mem = app.add_subcommand("report-memory", "weight storage accounting CSV");
  mem->add_option("config", config_path, "key=value config file")->required();
  mem->add_option("--set", overrides, "override a config key (key=value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, run_out_dir);
    if (sweep->parsed())
      return cmd_sweep(config_path, overrides, axis_specs, sweep_out_dir, threads);
    return cmd_report_memory(config_path, overrides);
  } catch (const hbfp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
