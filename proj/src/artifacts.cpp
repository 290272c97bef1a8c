#include "fpx/artifacts.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fpx/batch.hpp"

namespace fpx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RenderError("missing input " + p.string());
  return in;
}

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                                  "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};

}  // namespace

void write_run_artifacts(const fs::path& dir, const ScenarioConfig& cell, std::uint64_t seed, const RunResult& r) {
  fs::create_directories(dir);
  const GridGeometry& g = r.world.geometry();
  const RunMetrics& m = r.metrics;

  json meta;
  meta["cols"] = g.cols;
  meta["rows"] = g.rows;
  meta["resolution"] = g.resolution;
  meta["seed"] = seed;
  meta["config_hash"] = config_hash(cell.sim);
  meta["density"] = cell.density_label;
  meta["n_r"] = cell.sim.n_r;
  meta["comm_range"] = format_range(cell.sim.comm_range);
  meta["policy"] = to_string(cell.sim.family) + "/" + to_string(cell.sim.mode);
  meta["clustering"] = to_string(cell.sim.clustering);
  meta["ticks"] = m.ticks;
  meta["termination"] = m.termination;
  meta["coverage"] = m.coverage();
  meta["coverage_threshold"] = cell.sim.coverage_threshold;
  meta["total_path_m"] = m.total_path();
  meta["path_length_m"] = m.path_length;
  meta["overlaps"] = m.overlaps;
  meta["max_active_components"] = m.max_active_components;
  meta["decisions"] = m.decisions;
  meta["reachable_cells"] = m.reachable_cells;
  open_out(dir / "meta.json") << meta.dump(2) << '\n';

  {
    auto out = open_out(dir / "trace.jsonl");
    for (const auto& t : r.trace) {
      json rec = {{"tick", t.tick}, {"robot", t.robot}, {"x", t.pose.x}, {"y", t.pose.y},
                  {"yaw", t.pose.yaw}, {"target", t.target_cell}, {"event", t.event}};
      out << rec.dump() << '\n';
    }
  }
  {
    auto out = open_out(dir / "cells.csv");
    out << "robot,tick,col,row\n";
    for (std::size_t i = 0; i < r.cell_traces.size(); ++i) {
      for (const auto& v : r.cell_traces[i]) out << i << ',' << v.tick << ',' << g.col(v.cell) << ',' << g.row(v.cell) << '\n';
    }
  }
  {
    auto out = open_out(dir / "coverage.csv");
    out << "tick,coverage,entropy_bits,newly_known\n" << std::setprecision(10);
    for (std::size_t t = 0; t < m.coverage_trace.size(); ++t) {
      out << t + 1 << ',' << m.coverage_trace[t] << ',' << m.entropy_trace[t] << ',' << m.newly_known[t] << '\n';
    }
  }
  {
    auto out = open_out(dir / "world.pgm");
    write_pgm(out, r.world);
  }
  {
    auto out = open_out(dir / "belief.pgm");
    write_pgm(out, r.final_belief);
  }
}

GrayImage read_pgm(const fs::path& path) {
  auto in = open_in(path);
  std::string magic;
  int maxval = 0;
  GrayImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw RenderError("not an 8-bit P5 image: " + path.string());
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw RenderError("truncated image: " + path.string());
  return img;
}

void render_run(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(open_in(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw RenderError("bad meta.json in " + dir.string() + ": " + e.what());
  }
  const int cols = meta.at("cols");
  const int rows = meta.at("rows");
  const GrayImage world = read_pgm(dir / "world.pgm");
  if (world.width != cols || world.height != rows) throw RenderError("world.pgm does not match meta.json");

  // Cell traces.
  CellTraces traces;
  {
    auto in = open_in(dir / "cells.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      std::size_t robot = 0;
      int tick = 0, c = 0, r = 0;
      char comma = 0;
      if (!(is >> robot >> comma >> tick >> comma >> c >> comma >> r) || c < 0 || r < 0 || c >= cols || r >= rows) {
        throw RenderError("malformed cells.csv line: " + line);
      }
      if (traces.size() <= robot) traces.resize(robot + 1);
      traces[robot].push_back({tick, static_cast<CellIndex>(r) * cols + static_cast<CellIndex>(c)});
    }
  }
  const std::vector<OverlapEvent> overlaps = overlap_events(traces);

  const int px = std::max(2, 800 / std::max(cols, rows));
  const int w = cols * px;
  const int h = rows * px;
  auto cx = [&](CellIndex i) { return (static_cast<double>(i % cols) + 0.5) * px; };
  auto cy = [&](CellIndex i) { return h - (static_cast<double>(i / cols) + 0.5) * px; };
  {
    auto out = open_out(dir / "trajectories.svg");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
        << w << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#444\">\n";
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (world.pixels[static_cast<std::size_t>(rows - 1 - r) * cols + c] == 0) {
          out << "<rect x=\"" << c * px << "\" y=\"" << h - (r + 1) * px << "\" width=\"" << px << "\" height=\"" << px
              << "\"/>\n";
        }
      }
    }
    out << "</g>\n";
    for (std::size_t i = 0; i < traces.size(); ++i) {
      if (traces[i].empty()) continue;
      const char* color = kPalette[i % kPalette.size()];
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << std::max(1, px / 3)
          << "\" points=\"";
      for (const auto& v : traces[i]) out << cx(v.cell) << ',' << cy(v.cell) << ' ';
      out << "\"/>\n<circle cx=\"" << cx(traces[i].front().cell) << "\" cy=\"" << cy(traces[i].front().cell)
          << "\" r=\"" << px << "\" fill=\"" << color << "\"/>\n";
    }
    out << "<g class=\"overlaps\" fill=\"none\" stroke=\"black\" stroke-width=\"1\">\n";
    for (const auto& e : overlaps) {
      out << "<circle class=\"overlap\" cx=\"" << cx(e.cell) << "\" cy=\"" << cy(e.cell) << "\" r=\"" << px * 0.6 << "\"/>\n";
    }
    out << "</g>\n<text x=\"4\" y=\"14\" font-size=\"12\" font-family=\"sans-serif\">" << meta.value("policy", "")
        << " / " << meta.value("clustering", "") << ", seed " << meta.value("seed", 0) << ", " << overlaps.size()
        << " overlaps</text>\n</svg>\n";
  }

  std::vector<std::pair<int, double>> cov;
  {
    auto in = open_in(dir / "coverage.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      int tick = 0;
      double c = 0.0;
      char comma = 0;
      if (!(is >> tick >> comma >> c)) throw RenderError("malformed coverage.csv line: " + line);
      cov.emplace_back(tick, c);
    }
  }
  {
    const int pw = 640, ph = 360, m = 40;
    const int t_max = cov.empty() ? 1 : std::max(1, cov.back().first);
    auto X = [&](double t) { return m + (pw - 2 * m) * t / t_max; };
    auto Y = [&](double c) { return ph - m - (ph - 2 * m) * c; };
    const double thr = meta.value("coverage_threshold", 0.95);
    auto out = open_out(dir / "coverage.svg");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pw << "\" height=\"" << ph << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << m << "\" y1=\"" << Y(0) << "\" x2=\"" << pw - m << "\" y2=\"" << Y(0)
        << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << Y(0) << "\" x2=\"" << m << "\" y2=\"" << Y(1)
        << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << Y(thr) << "\" x2=\"" << pw - m << "\" y2=\""
        << Y(thr) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" "
        << "stroke-width=\"2\" points=\"" << X(0) << ',' << Y(0) << ' ';
    for (const auto& [t, c] : cov) out << X(t) << ',' << Y(c) << ' ';
    out << "\"/>\n<text x=\"" << m << "\" y=\"" << ph - 10 << "\" font-size=\"12\" font-family=\"sans-serif\">tick (0 to "
        << t_max << ")</text>\n<text x=\"4\" y=\"" << m - 10
        << "\" font-size=\"12\" font-family=\"sans-serif\">coverage of reachable free space</text>\n</svg>\n";
  }
}

}  // namespace fpx
