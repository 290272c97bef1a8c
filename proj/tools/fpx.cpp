// fpx: run, sweep, render and report multi-robot exploration scenarios.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpx/artifacts.hpp"
#include "fpx/batch.hpp"
#include "fpx/config.hpp"

namespace fs = std::filesystem;
using namespace fpx;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;

std::string run_dir_name(const ScenarioConfig& cell, std::uint64_t seed) {
  std::string policy = to_string(cell.sim.family) + "-" + to_string(cell.sim.mode);
  return cell.name + "_d" + cell.density_label + "_n" + std::to_string(cell.sim.n_r) + "_c" +
         format_range(cell.sim.comm_range) + "_" + policy + "_" + to_string(cell.sim.clustering) + "_s" +
         std::to_string(seed);
}

void write_outputs(const fs::path& out, const BatchResult& result) {
  fs::create_directories(out);
  {
    std::ofstream f(out / "runs.csv");
    write_runs_csv(f, result.rows);
  }
  {
    std::ofstream f(out / "timing.csv");
    write_timing_csv(f, result.timing);
  }
  std::ofstream f(out / "aggregate.md");
  write_aggregate(f, aggregate(result.rows));
}

int cmd_run(const fs::path& config, std::optional<fs::path> out, std::optional<std::uint64_t> seed_override,
            bool render) {
  const ConfigFile file = parse_config(config);
  if (!file.sweep.empty()) throw ConfigError("sweep", "the run verb takes a single scenario; use sweep");
  ScenarioConfig cell = file.base;
  if (out) cell.output = *out;
  if (seed_override) cell.seeds = {*seed_override};

  BatchResult result;
  for (std::uint64_t seed : cell.seeds) {
    const RunResult r = fpx::run(cell.sim, seed);
    const fs::path dir = cell.output / run_dir_name(cell, seed);
    write_run_artifacts(dir, cell, seed, r);
    if (render) render_run(dir);
    result.rows.push_back(make_row(cell, seed, r.metrics));
    TimingRow t;
    t.config_hash = result.rows.back().config_hash;
    t.seed = seed;
    t.mean_prioritize_latency_s = r.metrics.mean_latency();
    t.prioritize_ticks = r.metrics.latency_s.size();
    result.timing.push_back(t);
    std::cout << dir.string() << ": " << r.metrics.termination << " after " << r.metrics.ticks << " ticks, coverage "
              << r.metrics.coverage() << ", path " << r.metrics.total_path() << " m, overlaps " << r.metrics.overlaps
              << '\n';
  }
  write_outputs(cell.output, result);
  return 0;
}

int cmd_sweep(const fs::path& config, std::optional<fs::path> out, int workers,
              std::optional<std::uint64_t> seed_override, bool artifacts) {
  const ConfigFile file = parse_config(config);
  std::vector<ScenarioConfig> cells = expand(file);
  const fs::path dest = out ? *out : file.base.output;
  std::cerr << cells.size() << " cells\n";
  BatchOptions opt;
  opt.workers = workers;
  opt.seed_override = seed_override;
  opt.on_row = [](const RunRow& r) {
    std::cerr << r.cell_key() << " seed " << r.seed << ": " << r.termination << " " << r.ticks << '\n';
  };
  const BatchResult result = run_batch(cells, opt);
  write_outputs(dest, result);
  if (artifacts) {
    for (const auto& cell : cells) {
      const std::vector<std::uint64_t> seeds = seed_override ? std::vector<std::uint64_t>{*seed_override} : cell.seeds;
      for (std::uint64_t seed : seeds) {
        const fs::path dir = dest / "runs" / run_dir_name(cell, seed);
        write_run_artifacts(dir, cell, seed, fpx::run(cell.sim, seed));
        render_run(dir);
      }
    }
  }
  write_aggregate(std::cout, aggregate(result.rows));
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.termination == "error" ? 1 : 0;
  if (failed > 0) std::cerr << failed << " runs failed; see runs.csv\n";
  return 0;
}

int cmd_render(const std::vector<fs::path>& dirs) {
  int status = 0;
  for (const auto& d : dirs) {
    try {
      render_run(d);
      std::cout << "rendered " << d.string() << '\n';
    } catch (const Error& e) {
      std::cerr << "render failed for " << d.string() << ": " << e.what() << '\n';
      status = kExitFailure;
    }
  }
  return status;
}

int cmd_report(const fs::path& runs, std::optional<fs::path> out) {
  std::ifstream in(runs);
  if (!in) throw InputError("cannot open " + runs.string());
  const auto agg = aggregate(read_runs_csv(in));
  write_aggregate(std::cout, agg);
  if (out) {
    std::ofstream f(*out);
    write_aggregate(f, agg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot frontier exploration with probabilistic frontier prioritization"};
  app.require_subcommand(1);

  fs::path config;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed_override;
  int workers = 1;
  bool no_render = false;
  bool artifacts = false;

  auto* run = app.add_subcommand("run", "Run one scenario and write its artifacts");
  run->add_option("--config", config, "Scenario YAML")->required();
  run->add_option("--out", out, "Output directory (default: the config's output)");
  run->add_option("--seed-override", seed_override, "Run this seed instead of the configured list");
  run->add_flag("--no-render", no_render, "Skip SVG rendering");

  auto* sweep = app.add_subcommand("sweep", "Run every cell of a sweep file and aggregate");
  sweep->add_option("--config", config, "Sweep YAML")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--seed-override", seed_override, "Run every cell with this single seed");
  sweep->add_flag("--artifacts", artifacts, "Also write per-run traces and renders");

  std::vector<fs::path> dirs;
  auto* render = app.add_subcommand("render", "Render SVG artifacts from run directories");
  render->add_option("dirs", dirs, "Run directories")->required();

  fs::path runs_csv;
  auto* report = app.add_subcommand("report", "Aggregate table from a runs.csv");
  report->add_option("runs", runs_csv, "runs.csv")->required();
  report->add_option("--out", out, "Also write the table here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out, seed_override, !no_render);
    if (*sweep) return cmd_sweep(config, out, workers, seed_override, artifacts);
    if (*render) return cmd_render(dirs);
    if (*report) return cmd_report(runs_csv, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InputError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
