// cavmix: batch runner and trajectory analytics for mixed HV/CAV freeway runs.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cavmix/analytics.hpp"
#include "cavmix/config_toml.hpp"
#include "cavmix/experiment.hpp"
#include "cavmix/trajectory.hpp"

namespace fs = std::filesystem;
using namespace cavmix;

namespace {

int cmd_run(const std::string& config_path, const std::string& out, unsigned jobs, bool dry_run) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  if (auto problems = validate_config(cfg); !problems.empty()) {
    for (const auto& p : problems) std::cerr << "config error: " << p << '\n';
    return 1;
  }
  MatrixOptions opts;
  opts.out = out;
  opts.jobs = jobs;
  opts.dry_run = dry_run;
  return run_matrix(cfg, opts, std::cout);
}

int cmd_analyze(const std::string& trajectory, const std::string& out, const std::string& config_path,
                const std::string& summary_path) {
  ScenarioConfig cfg = desk_scale_config();
  std::optional<RunSummary> summary;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!summary_path.empty()) {
      std::ifstream in(summary_path);
      if (!in) throw std::runtime_error("cannot open " + summary_path);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      summary = summary_from_json(text);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    const auto records = load_trajectory_csv(trajectory);
    const auto report = analyze(records, summary, cfg);
    write_report(report, out);
    std::cout << to_json(report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

std::optional<Strategy> strategy_arg(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto parsed = parse_strategy(s);
  if (!parsed) throw CLI::ValidationError("strategy", "expected BASE, AD_HOC or LOCAL_COORD");
  return parsed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed HV/CAV freeway simulation and trajectory analytics"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the strategy x MPR x seed matrix of a scenario file");
  std::string config_path;
  std::string out_dir;
  unsigned jobs = 0;
  bool dry_run = false;
  run->add_option("config", config_path, "Scenario TOML file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--jobs", jobs, "Concurrent runs (default: hardware threads)");
  run->add_flag("--dry-run", dry_run, "Print the expanded matrix and exit");

  auto* compare = app.add_subcommand("compare", "Compare two matrix output directories");
  std::string dir_a;
  std::string dir_b;
  std::string compare_out;
  std::string strategy_a;
  std::string strategy_b;
  compare->add_option("dir_a", dir_a)->required();
  compare->add_option("dir_b", dir_b)->required();
  compare->add_option("--out", compare_out, "Comparison CSV")->required();
  compare->add_option("--strategy-a", strategy_a, "Strategy taken from dir_a (pairs cells by mpr and seed)");
  compare->add_option("--strategy-b", strategy_b, "Strategy taken from dir_b");

  auto* analyze_cmd = app.add_subcommand("analyze", "Metrics of a trajectory CSV");
  std::string trajectory;
  std::string analyze_out;
  std::string analyze_config;
  std::string analyze_summary;
  analyze_cmd->add_option("trajectory", trajectory)->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", analyze_out, "Output directory")->required();
  analyze_cmd->add_option("--config", analyze_config, "Scenario TOML for the throughput window");
  analyze_cmd->add_option("--summary", analyze_summary, "Run summary JSON supplying throughput");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, out_dir, jobs, dry_run);
  if (compare->parsed()) {
    std::optional<Strategy> sa;
    std::optional<Strategy> sb;
    try {
      sa = strategy_arg(strategy_a);
      sb = strategy_arg(strategy_b);
    } catch (const CLI::Error& e) {
      return app.exit(e);
    }
    if (sa.has_value() != sb.has_value()) {
      std::cerr << "--strategy-a and --strategy-b go together\n";
      return 1;
    }
    return compare_matrices(dir_a, dir_b, compare_out, sa, sb, std::cerr);
  }
  return cmd_analyze(trajectory, analyze_out, analyze_config, analyze_summary);
}
