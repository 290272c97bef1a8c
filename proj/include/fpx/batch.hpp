#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fpx/config.hpp"

namespace fpx {

inline constexpr int kCsvSchemaVersion = 1;

/// One row of runs.csv. Everything in it is a deterministic function of (config, seed).
struct RunRow {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string density;
  int n_r = 0;
  double comm_range = kInf;
  std::string policy;      // family/mode
  std::string clustering;
  int ticks = 0;
  double coverage = 0.0;
  double total_path_m = 0.0;
  std::size_t overlaps = 0;
  int max_active_components = 0;
  std::string termination;  // coverage, explored, timeout, error
  std::string error;

  std::string cell_key() const;  // density, n_r, comm_range, policy, clustering
};

/// One row of timing.csv: wall-clock measurements kept apart so runs.csv stays reproducible.
struct TimingRow {
  std::string config_hash;
  std::uint64_t seed = 0;
  double mean_prioritize_latency_s = 0.0;
  std::size_t prioritize_ticks = 0;
  double wall_s = 0.0;
};

struct BatchOptions {
  int workers = 1;
  std::optional<std::uint64_t> seed_override;
  std::function<void(const RunRow&)> on_row;  // called under a lock as runs finish
};

struct BatchResult {
  std::vector<RunRow> rows;  // sorted by cell (input order) then seed
  std::vector<TimingRow> timing;
};

RunRow make_row(const ScenarioConfig& cell, std::uint64_t seed, const RunMetrics& m);

BatchResult run_batch(const std::vector<ScenarioConfig>& cells, const BatchOptions& options = {});

void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows);
std::vector<RunRow> read_runs_csv(std::istream& in);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};
Summary summarize(const std::vector<double>& values);

struct AggregateRow {
  RunRow cell;  // cell fields only
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t completed = 0;  // termination coverage or explored
  Summary ticks, path, overlaps, coverage;
};

/// One row per cell, in first-appearance order. Failed runs are counted but excluded from the
/// statistics.
std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows);

/// Markdown table, one line per cell, "mean ± std" entries.
void write_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows);

}  // namespace fpx
