#include "fpx/viewpoint.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

namespace fpx {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct Node {
  double f;
  CellIndex idx;
  bool operator>(const Node& o) const { return f != o.f ? f > o.f : idx > o.idx; }
};

using OpenList = std::priority_queue<Node, std::vector<Node>, std::greater<Node>>;

double octile(const GridGeometry& g, CellIndex a, CellIndex b) {
  const double dx = std::abs(g.col(a) - g.col(b));
  const double dy = std::abs(g.row(a) - g.row(b));
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

// Length from the move counts so that equal-cost paths report bit-identical lengths.
double path_length(const GridGeometry& g, const std::vector<CellIndex>& cells) {
  long straight = 0;
  long diagonal = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const bool diag = g.col(cells[i]) != g.col(cells[i - 1]) && g.row(cells[i]) != g.row(cells[i - 1]);
    (diag ? diagonal : straight) += 1;
  }
  return (static_cast<double>(straight) + static_cast<double>(diagonal) * kSqrt2) * g.resolution;
}

Path build_path(const GridGeometry& g, const std::vector<CellIndex>& parent, CellIndex source, CellIndex goal) {
  Path p;
  for (CellIndex at = goal;; at = parent[at]) {
    p.cells.push_back(at);
    if (at == source) break;
  }
  std::reverse(p.cells.begin(), p.cells.end());
  p.length = path_length(g, p.cells);
  return p;
}

CellIndex require_free_start(const BeliefGrid& belief, const Pose& start) {
  const auto cell = belief.geometry().cell_at(start.position());
  if (!cell || !belief.free(*cell)) throw PlanningError("start cell is not Free in the belief");
  return *cell;
}

template <class Relax>
void for_each_free_neighbor(const BeliefGrid& belief, CellIndex idx, Relax&& relax) {
  const GridGeometry& g = belief.geometry();
  const int c = g.col(idx);
  const int r = g.row(idx);
  for (const auto& off : kNeighbors8) {
    const int nc = c + off[0];
    const int nr = r + off[1];
    if (!g.in_bounds(nc, nr)) continue;
    const CellIndex n = g.index(nc, nr);
    if (!belief.free(n)) continue;
    relax(n, (off[0] != 0 && off[1] != 0) ? kSqrt2 : 1.0);
  }
}

}  // namespace

std::vector<Vec2> ViewpointPool::positions() const {
  std::vector<Vec2> out;
  out.reserve(entries.size());
  for (const auto& v : entries) out.push_back(v.pose.position());
  return out;
}

std::optional<std::size_t> ViewpointPool::find(CellIndex frontier_cell) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), frontier_cell,
                             [](const Viewpoint& v, CellIndex c) { return v.frontier_cell < c; });
  if (it == entries.end() || it->frontier_cell != frontier_cell) return std::nullopt;
  return static_cast<std::size_t>(it - entries.begin());
}

std::optional<Path> plan_path(const BeliefGrid& belief, const Pose& start, const Pose& goal) {
  const GridGeometry& g = belief.geometry();
  const CellIndex s = require_free_start(belief, start);
  const auto goal_cell = g.cell_at(goal.position());
  if (!goal_cell || !belief.free(*goal_cell)) return std::nullopt;
  const CellIndex t = *goal_cell;

  std::vector<double> cost(g.size(), kInf);
  std::vector<CellIndex> parent(g.size(), 0);
  std::vector<bool> closed(g.size(), false);
  OpenList open;
  cost[s] = 0.0;
  open.push({octile(g, s, t), s});
  while (!open.empty()) {
    const CellIndex at = open.top().idx;
    open.pop();
    if (closed[at]) continue;
    closed[at] = true;
    if (at == t) return build_path(g, parent, s, t);
    for_each_free_neighbor(belief, at, [&](CellIndex n, double step) {
      const double c = cost[at] + step;
      if (c < cost[n]) {
        cost[n] = c;
        parent[n] = at;
        open.push({c + octile(g, n, t), n});
      }
    });
  }
  return std::nullopt;
}

DistanceField::DistanceField(const BeliefGrid& belief, const Pose& start)
    : geometry_(belief.geometry()), dist_(belief.size(), kInf), parent_(belief.size(), 0) {
  source_ = require_free_start(belief, start);
  std::vector<bool> closed(belief.size(), false);
  OpenList open;
  dist_[source_] = 0.0;
  open.push({0.0, source_});
  while (!open.empty()) {
    const CellIndex at = open.top().idx;
    open.pop();
    if (closed[at]) continue;
    closed[at] = true;
    for_each_free_neighbor(belief, at, [&](CellIndex n, double step) {
      const double c = dist_[at] + step;
      if (c < dist_[n]) {
        dist_[n] = c;
        parent_[n] = at;
        open.push({c, n});
      }
    });
  }
  for (double& d : dist_) d *= geometry_.resolution;
}

std::optional<Path> DistanceField::path_to(CellIndex idx) const {
  if (!std::isfinite(dist_[idx])) return std::nullopt;
  return build_path(geometry_, parent_, source_, idx);
}

std::vector<Pose> gain_samples(const GridGeometry& g, const Path& path, const SensorModel& sensor, double final_yaw) {
  std::vector<Pose> out;
  if (path.cells.empty()) return out;
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(sensor.range / (2.0 * g.resolution) - 1e-9)));
  const std::size_t last = path.cells.size() - 1;
  for (std::size_t i = 0; i < last; i += stride) {
    const Vec2 a = g.center(path.cells[i]);
    const Vec2 b = g.center(path.cells[i + 1]);
    out.push_back({a.x, a.y, wrap_angle(std::atan2(b.y - a.y, b.x - a.x))});
  }
  const Vec2 end = g.center(path.cells[last]);
  out.push_back({end.x, end.y, final_yaw});
  return out;
}

double information_gain(const BeliefGrid& belief, const Path& path, const SensorModel& sensor,
                        std::optional<double> final_yaw) {
  const GridGeometry& g = belief.geometry();
  double yaw = 0.0;
  if (final_yaw) {
    yaw = *final_yaw;
  } else if (path.cells.size() >= 2) {
    const Vec2 a = g.center(path.cells[path.cells.size() - 2]);
    const Vec2 b = g.center(path.cells.back());
    yaw = wrap_angle(std::atan2(b.y - a.y, b.x - a.x));
  }
  const auto samples = gain_samples(g, path, sensor, yaw);
  kernels::GainScratch scratch(belief.size());
  return kernels::predicted_gain(belief, sensor, samples, scratch);
}

double frontier_yaw(const BeliefGrid& belief, CellIndex frontier_cell) {
  const GridGeometry& g = belief.geometry();
  const int c = g.col(frontier_cell);
  const int r = g.row(frontier_cell);
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& off : kNeighbors8) {
    const int nc = c + off[0];
    const int nr = r + off[1];
    if (g.in_bounds(nc, nr) && belief.state(g.index(nc, nr)) == CellState::Unknown) {
      sx += off[0];
      sy += off[1];
    }
  }
  if (sx == 0.0 && sy == 0.0) return 0.0;
  return wrap_angle(std::atan2(sy, sx));
}

std::vector<Viewpoint> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                           const SensorModel& sensor, RobotId owner, const Pose& from,
                                           kernels::Backend backend) {
  if (frontiers.empty()) return {};
  return generate_viewpoints(belief, frontiers, sensor, owner, DistanceField(belief, from), backend);
}

std::vector<Viewpoint> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                           const SensorModel& sensor, RobotId owner, const DistanceField& field,
                                           kernels::Backend backend) {
  const RobotId owners[] = {owner};
  const DistanceField* fields[] = {&field};
  return std::move(generate_viewpoints(belief, frontiers, sensor, owners, fields, backend).front());
}

std::vector<std::vector<Viewpoint>> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                                        const SensorModel& sensor, std::span<const RobotId> owners,
                                                        std::span<const DistanceField* const> fields,
                                                        kernels::Backend backend) {
  if (owners.size() != fields.size()) throw ConsistencyError("one distance field per owner is required");
  std::vector<std::vector<Viewpoint>> out(owners.size());
  if (frontiers.empty()) return out;
  const GridGeometry& g = belief.geometry();

  std::vector<double> yaw(frontiers.size());
  for (std::size_t i = 0; i < frontiers.size(); ++i) yaw[i] = frontier_yaw(belief, frontiers.cells[i]);

  std::vector<std::vector<Pose>> queries;
  queries.reserve(frontiers.size() * owners.size());
  for (std::size_t o = 0; o < owners.size(); ++o) {
    out[o].reserve(frontiers.size());
    for (std::size_t i = 0; i < frontiers.size(); ++i) {
      const CellIndex cell = frontiers.cells[i];
      const Vec2 c = g.center(cell);
      Viewpoint vp;
      vp.pose = {c.x, c.y, yaw[i]};
      vp.owner = owners[o];
      vp.frontier_cell = cell;
      if (auto path = fields[o]->path_to(cell)) {
        vp.path_length = path->length;
        queries.push_back(gain_samples(g, *path, sensor, vp.pose.yaw));
      } else {
        queries.push_back({vp.pose});
      }
      out[o].push_back(vp);
    }
  }

  std::vector<double> gains(queries.size(), 0.0);
  if (backend == kernels::Backend::OpenMP) {
    kernels::omp::predicted_gains(belief, sensor, queries, gains);
  } else {
    kernels::serial::predicted_gains(belief, sensor, queries, gains);
  }
  std::size_t q = 0;
  for (auto& list : out) {
    for (auto& vp : list) vp.gain = gains[q++];
  }
  return out;
}

ViewpointPool merge_pools(std::span<const std::vector<Viewpoint>> pools) {
  ViewpointPool pool;
  for (const auto& p : pools) pool.entries.insert(pool.entries.end(), p.begin(), p.end());
  std::stable_sort(pool.entries.begin(), pool.entries.end(), [](const Viewpoint& a, const Viewpoint& b) {
    if (a.frontier_cell != b.frontier_cell) return a.frontier_cell < b.frontier_cell;
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.owner < b.owner;
  });
  pool.entries.erase(std::unique(pool.entries.begin(), pool.entries.end(),
                                 [](const Viewpoint& a, const Viewpoint& b) { return a.frontier_cell == b.frontier_cell; }),
                     pool.entries.end());
  for (const auto& p : pools) {
    for (const auto& v : p) pool.origin_robots.push_back(v.owner);
  }
  std::sort(pool.origin_robots.begin(), pool.origin_robots.end());
  pool.origin_robots.erase(std::unique(pool.origin_robots.begin(), pool.origin_robots.end()), pool.origin_robots.end());
  return pool;
}

std::vector<double> gain_probabilities(const ViewpointPool& pool) {
  if (pool.empty()) throw PrioritizationError("cannot prioritize an empty viewpoint pool");
  double total = 0.0;
  for (const auto& v : pool.entries) total += v.gain;
  std::vector<double> out(pool.size());
  if (!(total > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(pool.size()));
    return out;
  }
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = pool.entries[i].gain / total;
  return out;
}

void write_pool(std::ostream& out, const ViewpointPool& pool) {
  const auto old = out.precision(17);
  for (const auto& v : pool.entries) {
    out << v.owner << ' ' << v.pose.x << ' ' << v.pose.y << ' ' << v.pose.yaw << ' ' << v.gain << ' '
        << v.frontier_cell << ' ' << (v.reachable() ? v.path_length : -1.0) << '\n';
  }
  out.precision(old);
}

ViewpointPool read_pool(std::istream& in) {
  std::vector<Viewpoint> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Viewpoint v;
    double len = -1.0;
    if (!(ls >> v.owner >> v.pose.x >> v.pose.y >> v.pose.yaw >> v.gain >> v.frontier_cell >> len)) {
      throw InputError("malformed viewpoint record on line " + std::to_string(lineno));
    }
    v.path_length = len < 0.0 ? kInf : len;
    entries.push_back(v);
  }
  const std::vector<std::vector<Viewpoint>> one{std::move(entries)};
  return merge_pools(one);
}

}  // namespace fpx
