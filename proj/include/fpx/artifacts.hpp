#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fpx/config.hpp"
#include "fpx/sim.hpp"

namespace fpx {

/// Files of one run directory:
///   meta.json      geometry, cell fields, seed, summary metrics
///   trace.jsonl    one record per robot event (tick, robot, x, y, yaw, target, event)
///   cells.csv      robot,tick,col,row for every cell entry
///   coverage.csv   tick,coverage,entropy_bits,newly_known
///   world.pgm      ground truth (255 Free, 0 Occupied)
///   belief.pgm     final union belief (255 Free, 0 Occupied, 128 Unknown)
void write_run_artifacts(const std::filesystem::path& dir, const ScenarioConfig& cell, std::uint64_t seed,
                         const RunResult& result);

/// Reads a run directory and writes trajectories.svg (paths plus overlap markers) and
/// coverage.svg. Throws RenderError when an input file is missing or malformed.
void render_run(const std::filesystem::path& dir);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace fpx
