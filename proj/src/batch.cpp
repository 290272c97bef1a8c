#include "fpx/batch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include <omp.h>

namespace fpx {

namespace {

constexpr const char* kRunsHeader =
    "schema_version,config_hash,seed,density,n_r,comm_range,policy,clustering,ticks,coverage,total_path_m,overlaps,"
    "max_active_components,termination,error";

std::string clean(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string RunRow::cell_key() const {
  return density + "|" + std::to_string(n_r) + "|" + format_range(comm_range) + "|" + policy + "|" + clustering;
}

RunRow make_row(const ScenarioConfig& cell, std::uint64_t seed, const RunMetrics& m) {
  RunRow r;
  r.config_hash = config_hash(cell.sim);
  r.seed = seed;
  r.density = cell.density_label;
  r.n_r = cell.sim.n_r;
  r.comm_range = cell.sim.comm_range;
  r.policy = to_string(cell.sim.family) + "/" + to_string(cell.sim.mode);
  r.clustering = to_string(cell.sim.clustering);
  r.ticks = m.ticks;
  r.coverage = m.coverage();
  r.total_path_m = m.total_path();
  r.overlaps = m.overlaps;
  r.max_active_components = m.max_active_components;
  r.termination = m.termination;
  return r;
}

BatchResult run_batch(const std::vector<ScenarioConfig>& cells, const BatchOptions& options) {
  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (options.seed_override) {
      jobs.push_back({c, *options.seed_override});
    } else {
      for (std::uint64_t s : cells[c].seeds) jobs.push_back({c, s});
    }
  }
  BatchResult result;
  result.rows.resize(jobs.size());
  result.timing.resize(jobs.size());
  std::mutex lock;
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, options.workers))
  for (std::int64_t j = 0; j < n; ++j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    const ScenarioConfig& cell = cells[job.cell];
    const auto t0 = std::chrono::steady_clock::now();
    RunRow row;
    TimingRow timing;
    try {
      const RunResult res = run(cell.sim, job.seed);
      row = make_row(cell, job.seed, res.metrics);
      timing.mean_prioritize_latency_s = res.metrics.mean_latency();
      timing.prioritize_ticks = res.metrics.latency_s.size();
    } catch (const std::exception& e) {
      row = make_row(cell, job.seed, RunMetrics{});
      row.termination = "error";
      row.error = clean(e.what());
    }
    timing.config_hash = row.config_hash;
    timing.seed = job.seed;
    timing.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.rows[static_cast<std::size_t>(j)] = row;
    result.timing[static_cast<std::size_t>(j)] = timing;
    if (options.on_row) {
      std::lock_guard<std::mutex> guard(lock);
      options.on_row(row);
    }
  }
  // Jobs were laid out cell by cell; order seeds within each cell.
  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (jobs[a].cell != jobs[b].cell) return jobs[a].cell < jobs[b].cell;
    return jobs[a].seed < jobs[b].seed;
  });
  BatchResult sorted;
  for (std::size_t i : order) {
    sorted.rows.push_back(result.rows[i]);
    sorted.timing.push_back(result.timing[i]);
  }
  return sorted;
}

void write_runs_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << kRunsHeader << '\n';
  for (const auto& r : rows) {
    out << kCsvSchemaVersion << ',' << r.config_hash << ',' << r.seed << ',' << r.density << ',' << r.n_r << ','
        << format_range(r.comm_range) << ',' << r.policy << ',' << r.clustering << ',' << r.ticks << ','
        << fixed(r.coverage, 6) << ',' << fixed(r.total_path_m, 4) << ',' << r.overlaps << ','
        << r.max_active_components << ',' << r.termination << ',' << clean(r.error) << '\n';
  }
}

std::vector<RunRow> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) throw InputError("runs CSV header does not match schema");
  std::vector<RunRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 15) throw InputError("runs CSV line " + std::to_string(lineno) + ": expected 15 fields");
    if (f[0] != std::to_string(kCsvSchemaVersion)) {
      throw InputError("runs CSV line " + std::to_string(lineno) + ": unsupported schema version " + f[0]);
    }
    try {
      RunRow r;
      r.config_hash = f[1];
      r.seed = std::stoull(f[2]);
      r.density = f[3];
      r.n_r = std::stoi(f[4]);
      r.comm_range = f[5] == "inf" ? kInf : std::stod(f[5]);
      r.policy = f[6];
      r.clustering = f[7];
      r.ticks = std::stoi(f[8]);
      r.coverage = std::stod(f[9]);
      r.total_path_m = std::stod(f[10]);
      r.overlaps = std::stoull(f[11]);
      r.max_active_components = std::stoi(f[12]);
      r.termination = f[13];
      r.error = f[14];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InputError("runs CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "schema_version,config_hash,seed,mean_prioritize_latency_s,prioritize_ticks,wall_s\n";
  for (const auto& t : rows) {
    out << kCsvSchemaVersion << ',' << t.config_hash << ',' << t.seed << ',' << std::setprecision(6)
        << t.mean_prioritize_latency_s << ',' << t.prioritize_ticks << ',' << t.wall_s << '\n';
  }
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<const RunRow*>> members;
  for (const auto& r : rows) {
    auto [it, fresh] = slot.try_emplace(r.cell_key(), out.size());
    if (fresh) {
      AggregateRow a;
      a.cell = r;
      out.push_back(a);
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<double> ticks, path, overlaps, coverage;
    for (const RunRow* r : members[i]) {
      ++out[i].runs;
      if (r->termination == "error") {
        ++out[i].failures;
        continue;
      }
      if (r->termination == "coverage" || r->termination == "explored") ++out[i].completed;
      ticks.push_back(r->ticks);
      path.push_back(r->total_path_m);
      overlaps.push_back(static_cast<double>(r->overlaps));
      coverage.push_back(r->coverage);
    }
    out[i].ticks = summarize(ticks);
    out[i].path = summarize(path);
    out[i].overlaps = summarize(overlaps);
    out[i].coverage = summarize(coverage);
  }
  return out;
}

void write_aggregate(std::ostream& out, const std::vector<AggregateRow>& rows) {
  auto pm = [](const Summary& s, int digits) { return fixed(s.mean, digits) + " ± " + fixed(s.std, digits); };
  out << "| density | n_r | comm | policy | clustering | runs | reached | ticks | path (m) | overlaps | coverage |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& a : rows) {
    out << "| " << a.cell.density << " | " << a.cell.n_r << " | " << format_range(a.cell.comm_range) << " | "
        << a.cell.policy << " | " << a.cell.clustering << " | " << a.runs;
    if (a.failures > 0) out << " (" << a.failures << " failed)";
    out << " | " << a.completed << " | " << pm(a.ticks, 1) << " | " << pm(a.path, 1) << " | " << pm(a.overlaps, 1)
        << " | " << pm(a.coverage, 3) << " |\n";
  }
}

}  // namespace fpx
