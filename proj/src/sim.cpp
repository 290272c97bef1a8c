#include "fpx/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fpx/kmeans.hpp"
#include "fpx/rng.hpp"

namespace fpx {

namespace {

constexpr std::uint64_t kWorldTag = 0x776f726c64ULL;
constexpr std::uint64_t kSpawnTag = 0x737061776eULL;
constexpr std::uint64_t kFitTag = 0x666974ULL;

int auto_k(std::size_t n) {
  return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n) / 2.0))));
}

std::vector<bool> flood_reachable(const GroundTruthGrid& world, std::span<const Pose> spawns) {
  const GridGeometry& g = world.geometry();
  std::vector<bool> seen(g.size(), false);
  std::vector<CellIndex> stack;
  for (const auto& p : spawns) {
    const CellIndex c = *g.cell_at(p.position());
    if (!seen[c]) {
      seen[c] = true;
      stack.push_back(c);
    }
  }
  while (!stack.empty()) {
    const CellIndex at = stack.back();
    stack.pop_back();
    const int col = g.col(at);
    const int row = g.row(at);
    for (const auto& [dc, dr] : kNeighbors8) {
      if (!g.in_bounds(col + dc, row + dr)) continue;
      const CellIndex n = g.index(col + dc, row + dr);
      if (seen[n] || world.occupied(n)) continue;
      seen[n] = true;
      stack.push_back(n);
    }
  }
  return seen;
}

GroundTruthGrid make_world(const SimConfig& c, std::uint64_t seed) {
  WorldSpec spec = c.world;
  spec.seed = derive_seed(seed, kWorldTag);
  return generate_world(spec);
}

}  // namespace

std::string to_string(Clustering c) { return c == Clustering::Dpgmm ? "dpgmm" : "kmeans_hd"; }
std::string to_string(PriorityScale s) { return s == PriorityScale::Raw ? "raw" : "pool_max"; }

void SimConfig::validate() const {
  world.validate();
  sensor.validate();
  fame.validate();
  froshe.validate();
  if (n_r < 1) throw InputError("n_r must be at least 1");
  if (!(comm_range > 0)) throw InputError("comm_range must be positive or inf");
  if (kmeans_k < 0) throw InputError("kmeans_k must be non-negative");
  if (!spawn_override.empty() && static_cast<int>(spawn_override.size()) != n_r) {
    throw InputError("spawn_override must hold exactly n_r poses");
  }
  if (tick_budget < 1) throw InputError("tick_budget must be at least 1");
  if (!(coverage_threshold > 0 && coverage_threshold <= 1)) throw InputError("coverage_threshold must be in (0, 1]");
  if (!(speed > 0)) throw InputError("speed must be positive");
  if (redecide_period < 1) throw InputError("redecide_period must be at least 1");
  if (!(robot_radius > 0)) throw InputError("robot_radius must be positive");
}

double RunMetrics::total_path() const { return std::accumulate(path_length.begin(), path_length.end(), 0.0); }

double RunMetrics::mean_latency() const {
  if (latency_s.empty()) return 0.0;
  return std::accumulate(latency_s.begin(), latency_s.end(), 0.0) / static_cast<double>(latency_s.size());
}

std::vector<OverlapEvent> overlap_events(const CellTraces& traces) {
  struct Event {
    int tick;
    std::size_t robot;
    std::size_t order;
    CellIndex cell;
  };
  std::vector<Event> events;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    for (std::size_t i = 0; i < traces[r].size(); ++i) events.push_back({traces[r][i].tick, r, i, traces[r][i].cell});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.robot != b.robot) return a.robot < b.robot;
    return a.order < b.order;
  });
  // Per cell: the first two distinct robots to visit it are enough to answer "visited by
  // someone other than i".
  std::map<CellIndex, std::pair<long long, long long>> visitors;
  std::vector<std::pair<std::size_t, CellIndex>> counted;
  std::vector<OverlapEvent> out;
  for (const auto& e : events) {
    auto& v = visitors.try_emplace(e.cell, -1, -1).first->second;
    const auto r = static_cast<long long>(e.robot);
    const bool other = (v.first >= 0 && v.first != r) || (v.second >= 0 && v.second != r);
    if (other) {
      const std::pair<std::size_t, CellIndex> key{e.robot, e.cell};
      auto it = std::lower_bound(counted.begin(), counted.end(), key);
      if (it == counted.end() || *it != key) {
        counted.insert(it, key);
        out.push_back({e.tick, static_cast<RobotId>(e.robot), e.cell});
      }
    }
    if (v.first < 0) {
      v.first = r;
    } else if (v.first != r && v.second < 0) {
      v.second = r;
    }
  }
  return out;
}

std::size_t count_overlaps(const CellTraces& traces) { return overlap_events(traces).size(); }

Simulation::Simulation(const SimConfig& config, std::uint64_t seed, SimObserver observer)
    : config_(config), seed_(seed), observer_(std::move(observer)), world_(make_world(config, seed)) {
  config_.validate();
  const GridGeometry& g = world_.geometry();
  if (config_.spawn_override.empty()) {
    spawns_ = spawn_poses(world_, config_.n_r, derive_seed(seed, kSpawnTag), config_.robot_radius);
  } else {
    spawns_ = config_.spawn_override;
    for (const Pose& p : spawns_) {
      const auto c = g.cell_at(p.position());
      if (!c || world_.occupied(*c)) throw SpawnError("spawn override pose is outside the world or in an obstacle");
    }
  }
  union_ = BeliefGrid(g);
  beliefs_.assign(config_.n_r, BeliefGrid(g));
  cell_traces_.resize(config_.n_r);
  metrics_.path_length.assign(config_.n_r, 0.0);
  for (int i = 0; i < config_.n_r; ++i) {
    RobotState r;
    r.id = i;
    r.pose = spawns_[i];
    robots_.push_back(r);
    cell_traces_[i].push_back({0, *g.cell_at(r.pose.position())});
    trace_.push_back({0, i, r.pose, -1, "spawn"});
  }
  reachable_ = flood_reachable(world_, spawns_);
  metrics_.reachable_cells = static_cast<std::size_t>(std::count(reachable_.begin(), reachable_.end(), true));
}

std::vector<std::vector<RobotId>> Simulation::components() const {
  const int n = config_.n_r;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (distance(robots_[i].pose.position(), robots_[j].pose.position()) <= config_.comm_range) {
        const int a = find(i);
        const int b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<RobotId>> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

void Simulation::assign(RobotState& r, const Viewpoint& vp, Path path) {
  r.target = vp;
  r.last_target = vp.pose;
  r.path = std::move(path);
  r.path_pos = 0;
  r.last_decision = tick_;
  r.blocked = false;
}

void Simulation::decide(const std::vector<RobotId>& members, const FrontierSet& frontiers, double& latency) {
  const BeliefGrid& belief = beliefs_[members.front()];
  std::vector<RobotId> deciding;
  for (RobotId id : members) {
    const RobotState& r = robots_[id];
    if (!r.target || r.blocked || tick_ - r.last_decision >= config_.redecide_period) deciding.push_back(id);
  }
  if (deciding.empty()) return;

  std::vector<DistanceField> fields;
  std::vector<const DistanceField*> field_ptrs;
  fields.reserve(members.size());
  for (RobotId id : members) {
    fields.emplace_back(belief, robots_[id].pose);
    field_ptrs.push_back(&fields.back());
  }
  const std::vector<std::vector<Viewpoint>> own =
      generate_viewpoints(belief, frontiers, config_.sensor, members, field_ptrs, config_.backend);
  ViewpointPool pool = merge_pools(own);
  // A viewpoint no robot expects to learn anything from is not a target.
  std::erase_if(pool.entries, [](const Viewpoint& v) { return !(v.gain > 0); });
  const std::size_t n = pool.size();
  if (n == 0) {
    for (RobotId id : deciding) {
      RobotState& r = robots_[id];
      r.target.reset();
      r.path.reset();
      r.last_decision = tick_;
      trace_.push_back({tick_, id, r.pose, -1, "idle"});
    }
    return;
  }
  std::vector<std::size_t> frontier_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    frontier_of[i] = static_cast<std::size_t>(
        std::lower_bound(frontiers.cells.begin(), frontiers.cells.end(), pool.entries[i].frontier_cell) -
        frontiers.cells.begin());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const bool fp = config_.mode == PolicyMode::Fp;
  const bool use_dpgmm = fp && config_.clustering == Clustering::Dpgmm;
  const bool use_kmeans = (fp && config_.clustering == Clustering::KmeansHd) ||
                          (!fp && config_.family == PolicyFamily::Froshe);
  const std::vector<Vec2> positions = pool.positions();
  const std::uint64_t fit_seed = derive_seed(derive_seed(seed_, kFitTag + static_cast<std::uint64_t>(tick_)),
                                             static_cast<std::uint64_t>(members.front()));

  std::vector<double> gain_probs;
  if (fp) gain_probs = gain_probabilities(pool);
  std::optional<MixtureModel> model;
  std::optional<KMeansResult> km;
  if (use_dpgmm) {
    auto it = warm_.find(members.front());
    const MixtureModel* warm = it == warm_.end() ? nullptr : &it->second;
    DpgmmFit fit = fit_dpgmm(positions, warm, fit_seed, config_.dpgmm);
    model = std::move(fit.model);
    metrics_.max_active_components = std::max(metrics_.max_active_components, model->active_count());
    warm_[members.front()] = *model;
  } else if (use_kmeans) {
    int k = fp && config_.kmeans_k > 0 ? config_.kmeans_k : auto_k(n);
    k = std::clamp(k, 1, static_cast<int>(n));
    km = fit_kmeans(positions, k, fit_seed);
  }

  auto peers_of = [&](RobotId self) {
    std::vector<PeerInfo> peers;
    for (RobotId id : members) {
      if (id == self) continue;
      const RobotState& p = robots_[id];
      peers.push_back({id, p.pose, p.target ? std::optional<Pose>(p.target->pose) : std::nullopt});
    }
    return peers;
  };

  for (RobotId id : deciding) {
    RobotState& r = robots_[id];
    const std::size_t m = static_cast<std::size_t>(std::find(members.begin(), members.end(), id) - members.begin());
    const DistanceField& field = fields[m];
    std::vector<double> lengths(n);
    // Unreachable for this robot: no path, nothing to learn on its own route, or already there.
    const CellIndex here = *belief.geometry().cell_at(r.pose.position());
    for (std::size_t i = 0; i < n; ++i) {
      const Viewpoint& mine = own[m][frontier_of[i]];
      const bool useful = mine.gain > 0 && mine.frontier_cell != here;
      lengths[i] = useful ? field.distance(mine.frontier_cell) : kInf;
    }

    std::vector<double> scaled;
    if (fp) {
      PriorityRecord rec;
      rec.tick = tick_;
      rec.robot = id;
      rec.clustering = config_.clustering;
      rec.pool = &pool;
      if (use_dpgmm) {
        rec.component = allocate_component(*model, r.pose);
        rec.entries = prioritize_log(gain_probs, log_cluster_coherence(*model, rec.component, pool));
      } else {
        rec.component = km->nearest(r.pose.position());
        const std::vector<double> coh = hard_coherence(*km, rec.component);
        rec.entries = prioritize(gain_probs, coh);
        rec.in_cluster.resize(n);
        for (std::size_t i = 0; i < n; ++i) rec.in_cluster[i] = coh[i] > 0;
      }
      scaled.assign(n, 0.0);
      // Scaling by the maximum is done on log values so it survives underflow of the linear joint.
      const double top = config_.priority_scale == PriorityScale::PoolMax ? rec.entries.front().log_joint : 0.0;
      if (std::isfinite(top)) {
        for (const auto& e : rec.entries) scaled[e.viewpoint] = std::exp(e.log_joint - top);
      }
      if (observer_.on_priorities) observer_.on_priorities(rec);
    }

    std::optional<std::size_t> choice;
    if (config_.family == PolicyFamily::Fame) {
      const std::vector<PeerInfo> peers = peers_of(id);
      if (auto c = fame_select(r.pose, pool, scaled, peers, r.last_target, lengths, config_.fame, config_.mode)) {
        choice = c->viewpoint;
      }
    } else if (fp) {
      std::vector<FrosheCandidate> cands;
      std::vector<std::size_t> ids;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(lengths[i])) continue;
        cands.push_back({pool.entries[i].pose.position(), scaled[i]});
        ids.push_back(i);
      }
      if (auto c = froshe_select(r.pose, cands, config_.froshe, config_.mode)) choice = ids[c->candidate];
    } else {
      // Baseline: score cluster centroids, then head for the reachable member nearest the chosen one.
      const int k = static_cast<int>(km->centroids.size());
      std::vector<std::optional<std::size_t>> goal(k);
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(lengths[i])) continue;
        const int c = km->assignment[i];
        const double d = distance(pool.entries[i].pose.position(), km->centroids[c]);
        if (!goal[c] || d < distance(pool.entries[*goal[c]].pose.position(), km->centroids[c])) goal[c] = i;
      }
      std::vector<FrosheCandidate> cands;
      std::vector<int> ids;
      for (int c = 0; c < k; ++c) {
        if (!goal[c]) continue;
        cands.push_back({km->centroids[c], static_cast<double>(km->sizes[c])});
        ids.push_back(c);
      }
      if (auto c = froshe_select(r.pose, cands, config_.froshe, config_.mode)) choice = goal[ids[c->candidate]];
    }

    ++metrics_.decisions;
    if (!choice) {
      r.target.reset();
      r.path.reset();
      r.last_decision = tick_;
      trace_.push_back({tick_, id, r.pose, -1, "idle"});
      continue;
    }
    const Viewpoint& vp = pool.entries[*choice];
    auto path = field.path_to(vp.frontier_cell);
    if (!path) throw ConsistencyError("policy chose an unreachable viewpoint");
    assign(r, vp, std::move(*path));
    trace_.push_back({tick_, id, r.pose, static_cast<long long>(vp.frontier_cell), "decide"});
  }
  latency += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void Simulation::move(RobotState& r) {
  if (!r.target || !r.path) return;
  const GridGeometry& g = world_.geometry();
  const BeliefGrid& belief = beliefs_[r.id];
  const auto& cells = r.path->cells;
  for (std::size_t i = r.path_pos; i < cells.size(); ++i) {
    if (belief.state(cells[i]) != CellState::Free) {
      auto path = plan_path(belief, r.pose, r.target->pose);
      if (!path) {
        r.target.reset();
        r.path.reset();
        r.blocked = true;
        trace_.push_back({tick_, r.id, r.pose, -1, "blocked"});
        return;
      }
      r.path = std::move(*path);
      r.path_pos = 0;
      trace_.push_back({tick_, r.id, r.pose, static_cast<long long>(r.target->frontier_cell), "replan"});
      break;
    }
  }
  const auto& path = r.path->cells;
  r.credit += config_.speed;
  bool moved = false;
  while (r.path_pos + 1 < path.size()) {
    const CellIndex a = path[r.path_pos];
    const CellIndex b = path[r.path_pos + 1];
    const bool diagonal = g.col(a) != g.col(b) && g.row(a) != g.row(b);
    const double cost = (diagonal ? std::sqrt(2.0) : 1.0) * g.resolution;
    if (cost > r.credit + 1e-9) break;
    r.credit -= cost;
    r.traveled += cost;
    metrics_.path_length[r.id] += cost;
    ++r.path_pos;
    const Vec2 pa = g.center(a);
    const Vec2 pb = g.center(b);
    r.pose = {pb.x, pb.y, wrap_angle(std::atan2(pb.y - pa.y, pb.x - pa.x))};
    cell_traces_[r.id].push_back({tick_, b});
    moved = true;
  }
  const long long tc = static_cast<long long>(r.target->frontier_cell);
  if (r.path_pos + 1 >= path.size()) {
    r.pose.yaw = r.target->pose.yaw;
    r.target.reset();
    r.path.reset();
    r.credit = 0.0;
    trace_.push_back({tick_, r.id, r.pose, tc, "arrive"});
  } else if (moved) {
    trace_.push_back({tick_, r.id, r.pose, tc, "move"});
  }
}

void Simulation::update_metrics() {
  const std::size_t before = union_.known_count();
  for (const auto& b : beliefs_) union_ = merge_beliefs(union_, b);
  const std::size_t after = union_.known_count();
  metrics_.newly_known.push_back(after - before);
  std::size_t covered = 0;
  for (CellIndex c = 0; c < union_.size(); ++c) {
    if (reachable_[c] && union_.known(c)) ++covered;
  }
  metrics_.coverage_trace.push_back(static_cast<double>(covered) / static_cast<double>(metrics_.reachable_cells));
  metrics_.entropy_trace.push_back(entropy(union_));
}

void Simulation::step() {
  if (finished()) return;
  ++tick_;
  for (auto& r : robots_) sense(world_, beliefs_[r.id], r.pose, config_.sensor);

  double latency = 0.0;
  bool any_frontier = false;
  bool decided = false;
  for (const auto& members : components()) {
    BeliefGrid merged = beliefs_[members.front()];
    for (std::size_t i = 1; i < members.size(); ++i) merged = merge_beliefs(merged, beliefs_[members[i]]);
    for (RobotId id : members) beliefs_[id] = merged;

    const FrontierSet frontiers = detect_frontiers(merged);
    std::vector<bool> is_frontier(merged.size(), false);
    for (CellIndex c : frontiers.cells) is_frontier[c] = true;
    for (RobotId id : members) {
      RobotState& r = robots_[id];
      if (r.target && !is_frontier[r.target->frontier_cell]) {
        r.target.reset();
        r.path.reset();
      }
    }
    if (frontiers.empty()) {
      for (RobotId id : members) robots_[id].credit = 0.0;
      continue;
    }
    any_frontier = true;
    const int before = metrics_.decisions;
    decide(members, frontiers, latency);
    decided = decided || metrics_.decisions > before;
  }
  if (decided) metrics_.latency_s.push_back(latency);

  const bool any_target = std::any_of(robots_.begin(), robots_.end(), [](const RobotState& r) { return r.target.has_value(); });
  for (auto& r : robots_) move(r);
  update_metrics();

  metrics_.ticks = tick_;
  if (!any_frontier || !any_target) {
    metrics_.termination = "explored";
  } else if (metrics_.coverage() >= config_.coverage_threshold) {
    metrics_.termination = "coverage";
  } else if (tick_ >= config_.tick_budget) {
    metrics_.termination = "timeout";
  }
  if (finished()) metrics_.overlaps = count_overlaps(cell_traces_);
}

RunResult run(const SimConfig& config, std::uint64_t seed, SimObserver observer) {
  Simulation sim(config, seed, std::move(observer));
  while (!sim.finished()) sim.step();
  return {sim.metrics(), sim.trace(), sim.cell_traces(), sim.spawns(), sim.union_belief(), sim.world()};
}

}  // namespace fpx
