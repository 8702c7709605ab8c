#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavmix/analytics.hpp"
#include "cavmix/core.hpp"
#include "cavmix/engine.hpp"

namespace cavmix {

/// One (strategy, penetration rate, seed) run of a matrix.
struct MatrixCell {
  Strategy strategy = Strategy::Base;
  double mpr = 0.0;
  std::uint64_t seed = 1;

  std::string name() const;
  /// The scenario actually simulated: base config with strategy and mpr applied.
  ScenarioConfig config(const ScenarioConfig& base) const;
};

/// BASE once per seed with mpr 0, then AD_HOC and LOCAL_COORD for every mpr and seed.
std::vector<MatrixCell> expand_matrix(const ScenarioConfig& cfg);

struct CellOutcome {
  MatrixCell cell;
  RunSummary summary;
  MetricReport report;
  bool halted = false;
  std::string error;
};

/// Runs one cell and writes trajectory.csv, events.csv, summary.json and the metric files into `dir`.
CellOutcome run_cell(const ScenarioConfig& base, const MatrixCell& cell, const std::filesystem::path& dir);

struct MatrixOptions {
  std::filesystem::path out;
  unsigned jobs = 0;  // 0 = hardware threads
  bool dry_run = false;
};

/// Exit code: 0 ok, 2 when any run halted.
int run_matrix(const ScenarioConfig& cfg, const MatrixOptions& opts, std::ostream& log);

/// Deltas per overlapping cell and per-mpr K-S tests on hard-brake samples.
/// With both strategies given, cells pair up by (mpr, seed) across the two
/// strategies; otherwise by (strategy, mpr, seed). Exit code 1 without overlap
/// or when a file is missing.
int compare_matrices(const std::filesystem::path& a, const std::filesystem::path& b,
                     const std::filesystem::path& out, std::optional<Strategy> strategy_a,
                     std::optional<Strategy> strategy_b, std::ostream& log);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace cavmix
