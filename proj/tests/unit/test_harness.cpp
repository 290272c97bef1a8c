#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fpx/artifacts.hpp"
#include "fpx/batch.hpp"
#include "fpx/config.hpp"

using namespace fpx;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fpx_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSweep = R"(
name: tiny
world: {width: 16, height: 16}
sweep:
  tree_density: [0.05, 0.15]
  policy: [fame/baseline, fame/fp]
n_r: 2
seeds: {first: 0, count: 10}
tick_budget: 300
)";

}  // namespace

TEST(Config, MinimalFileKeepsDefaults) {
  const auto f = parse_config_text("n_r: 3\n");
  const auto cells = expand(f);
  ASSERT_EQ(cells.size(), 1u);
  const SimConfig& s = cells[0].sim;
  EXPECT_EQ(s.n_r, 3);
  EXPECT_EQ(s.world.width, 32.0);
  EXPECT_EQ(s.world.tree_density, 0.1);
  EXPECT_EQ(s.sensor.range, 5.0);
  EXPECT_TRUE(std::isinf(s.comm_range));
  EXPECT_EQ(s.family, PolicyFamily::Fame);
  EXPECT_EQ(s.mode, PolicyMode::Fp);
  EXPECT_EQ(cells[0].seeds, std::vector<std::uint64_t>{0});
}

TEST(Config, ValuesAndInfinity) {
  const auto f = parse_config_text(
      "world: {tree_density: 0.15}\nn_r: 6\ncomm_range: inf\nseeds: [3, 4]\npolicy: {family: froshe, mode: baseline}\n");
  const auto& s = f.base.sim;
  EXPECT_EQ(s.world.tree_density, 0.15);
  EXPECT_EQ(f.base.density_label, "0.15");
  EXPECT_EQ(s.n_r, 6);
  EXPECT_TRUE(std::isinf(s.comm_range));
  EXPECT_EQ(s.family, PolicyFamily::Froshe);
  EXPECT_EQ(s.mode, PolicyMode::Baseline);
  EXPECT_EQ(f.base.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(parse_config_text("comm_range: 12.5\n").base.sim.comm_range, 12.5);
}

TEST(Config, MixedDensityUsesQuadrants) {
  const auto f = parse_config_text("world: {tree_density: mixed}\n");
  EXPECT_EQ(f.base.density_label, "mixed");
  EXPECT_EQ(f.base.sim.world.density_patches.size(), 4u);
}

TEST(Config, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("world: {widht: 3}\n"), "world.widht");
  EXPECT_EQ(field_of("bogus: 1\n"), "bogus");
  EXPECT_EQ(field_of("n_r: 0\n"), "n_r");
  EXPECT_EQ(field_of("comm_range: -2\n"), "comm_range");
  EXPECT_EQ(field_of("policy: {family: greedy}\n"), "policy.family");
  EXPECT_EQ(field_of("sweep: {tree_density: [0.1, dense]}\n"), "sweep.tree_density");
  EXPECT_EQ(field_of("n_r: [1\n"), "<parse>");
  EXPECT_THROW(parse_config("/nonexistent/fpx.yaml"), ConfigError);
}

TEST(Config, SweepExpandsInAxisOrder) {
  const auto cells = expand(parse_config_text(kSweep));
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].density_label, "0.05");
  EXPECT_EQ(cells[0].sim.mode, PolicyMode::Baseline);
  EXPECT_EQ(cells[1].sim.mode, PolicyMode::Fp);
  EXPECT_EQ(cells[3].density_label, "0.15");
  EXPECT_EQ(cells[3].sim.world.tree_density, 0.15);
  EXPECT_NE(config_hash(cells[0].sim), config_hash(cells[1].sim));
  EXPECT_EQ(config_hash(cells[0].sim), config_hash(expand(parse_config_text(kSweep))[0].sim));
  EXPECT_EQ(config_hash(cells[0].sim).size(), 16u);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(FPX_SOURCE_DIR "/configs")) {
    if (e.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(expand(parse_config(e.path()))) << e.path();
  }
}

TEST(Batch, SweepProducesRowsAggregateAndStableCsv) {
  const auto cells = expand(parse_config_text(kSweep));
  std::size_t streamed = 0;
  BatchOptions opt;
  opt.on_row = [&](const RunRow&) { ++streamed; };
  const auto a = run_batch(cells, opt);
  ASSERT_EQ(a.rows.size(), 40u);
  EXPECT_EQ(streamed, 40u);
  EXPECT_EQ(a.timing.size(), 40u);
  for (const auto& r : a.rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_NE(r.termination, "error");
  }

  std::ostringstream csv;
  write_runs_csv(csv, a.rows);
  std::istringstream in(csv.str());
  const auto back = read_runs_csv(in);
  ASSERT_EQ(back.size(), a.rows.size());
  std::ostringstream again;
  write_runs_csv(again, back);
  EXPECT_EQ(again.str(), csv.str());

  const auto agg = aggregate(a.rows);
  ASSERT_EQ(agg.size(), 4u);
  for (const auto& g : agg) EXPECT_EQ(g.runs, 10u);
  std::ostringstream table;
  write_aggregate(table, agg);
  EXPECT_NE(table.str().find("±"), std::string::npos);

  const auto b = run_batch(cells);
  std::ostringstream csv_b;
  write_runs_csv(csv_b, b.rows);
  EXPECT_EQ(csv_b.str(), csv.str());
}

TEST(Batch, FailedRunIsRecordedNotFatal) {
  auto cells = expand(parse_config_text("world: {width: 8, height: 8, spawn_zone: [1, 1, 2, 2]}\nn_r: 40\n"));
  const auto r = run_batch(cells);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].termination, "error");
  EXPECT_FALSE(r.rows[0].error.empty());
  const auto agg = aggregate(r.rows);
  EXPECT_EQ(agg[0].failures, 1u);
}

TEST(Summary, SampleStandardDeviation) {
  const auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.std, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(summarize({3.0}).std, 0.0);
}

TEST(Render, SingleRobotHasNoOverlapMarkers) {
  auto cells = expand(parse_config_text("world: {width: 16, height: 16}\nn_r: 1\n"));
  const auto dir = scratch_dir("render1");
  const auto result = run(cells[0].sim, 0);
  write_run_artifacts(dir, cells[0], 0, result);
  for (const char* f : {"meta.json", "trace.jsonl", "cells.csv", "coverage.csv", "world.pgm", "belief.pgm"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  render_run(dir);
  const auto svg = slurp(dir / "trajectories.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.find("class=\"overlap\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "coverage.svg"));

  const auto world = read_pgm(dir / "world.pgm");
  EXPECT_EQ(world.width, 32);
  EXPECT_EQ(world.height, 32);
}

TEST(Render, OverlapMarkersMatchMetricAndMissingTraceFails) {
  auto cells = expand(parse_config_text("world: {width: 16, height: 16}\nn_r: 3\n"));
  const auto dir = scratch_dir("render2");
  const auto result = run(cells[0].sim, 1);
  write_run_artifacts(dir, cells[0], 1, result);
  render_run(dir);
  const auto svg = slurp(dir / "trajectories.svg");
  std::size_t markers = 0;
  for (auto at = svg.find("class=\"overlap\""); at != std::string::npos; at = svg.find("class=\"overlap\"", at + 1)) {
    ++markers;
  }
  EXPECT_EQ(markers, result.metrics.overlaps);
  fs::remove(dir / "cells.csv");
  EXPECT_THROW(render_run(dir), RenderError);
  EXPECT_THROW(render_run(scratch_dir("render3")), RenderError);
}
