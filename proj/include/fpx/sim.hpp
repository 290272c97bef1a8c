#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpx/dpgmm.hpp"
#include "fpx/mapping.hpp"
#include "fpx/policy.hpp"
#include "fpx/priority.hpp"
#include "fpx/viewpoint.hpp"
#include "fpx/world.hpp"

namespace fpx {

enum class Clustering { Dpgmm, KmeansHd };
std::string to_string(Clustering c);

/// How the joint priority enters the fp policy costs: as the probability itself, or divided by
/// the pool maximum.
enum class PriorityScale { Raw, PoolMax };
std::string to_string(PriorityScale s);

struct SimConfig {
  WorldSpec world;  // world.seed is replaced by one derived from the run seed
  SensorModel sensor;
  int n_r = 4;
  double comm_range = kInf;  // meters
  PolicyFamily family = PolicyFamily::Fame;
  PolicyMode mode = PolicyMode::Fp;
  FamePolicyParams fame;
  FroshePolicyParams froshe;
  Clustering clustering = Clustering::Dpgmm;
  PriorityScale priority_scale = PriorityScale::Raw;
  int kmeans_k = 0;  // fixed K for kmeans_hd; 0 picks max(1, round(sqrt(N/2))) per fit
  int tick_budget = 1000;
  double coverage_threshold = 0.95;
  double speed = 1.0;  // meters per tick
  int redecide_period = 5;
  double robot_radius = 0.3;
  std::vector<Pose> spawn_override;  // when non-empty: exactly n_r poses used instead of sampling
  DpgmmOptions dpgmm;
  kernels::Backend backend = kernels::Backend::OpenMP;

  void validate() const;
};

struct RobotState {
  RobotId id = 0;
  Pose pose;
  std::optional<Viewpoint> target;
  std::optional<Pose> last_target;  // most recent chosen viewpoint, kept after arrival
  std::optional<Path> path;
  std::size_t path_pos = 0;  // index of the current cell in `path`
  double credit = 0.0;       // unspent motion budget, meters
  double traveled = 0.0;
  int last_decision = -1;
  bool blocked = false;
};

struct CellVisit {
  int tick = 0;
  CellIndex cell = 0;
};

/// Entries into cells, one list per robot. Within a tick robots move in id order, so events are
/// ordered by (tick, robot id, position in list).
using CellTraces = std::vector<std::vector<CellVisit>>;

/// Number of (robot, cell) pairs where the robot enters the cell after a different robot has
/// already been there.
std::size_t count_overlaps(const CellTraces& traces);

struct OverlapEvent {
  int tick = 0;
  RobotId robot = 0;
  CellIndex cell = 0;
};

/// The events counted by count_overlaps, in time order.
std::vector<OverlapEvent> overlap_events(const CellTraces& traces);

struct TraceRecord {
  int tick = 0;
  RobotId robot = 0;
  Pose pose;
  long long target_cell = -1;
  std::string event;  // spawn, decide, idle, move, arrive, replan, blocked
};

struct RunMetrics {
  int ticks = 0;
  std::vector<double> coverage_trace;  // index t: coverage after tick t + 1
  std::vector<double> entropy_trace;   // bits of the union belief after each tick
  std::vector<std::size_t> newly_known;
  std::vector<double> path_length;     // per robot, meters
  std::size_t overlaps = 0;
  std::vector<double> latency_s;       // wall time of each prioritization tick
  std::string termination;             // explored, coverage, timeout
  int max_active_components = 0;
  int decisions = 0;
  std::size_t reachable_cells = 0;

  double coverage() const { return coverage_trace.empty() ? 0.0 : coverage_trace.back(); }
  double total_path() const;
  double mean_latency() const;
};

/// One robot's prioritization at one decision tick (fp modes only).
struct PriorityRecord {
  int tick = 0;
  RobotId robot = 0;
  Clustering clustering = Clustering::Dpgmm;
  int component = 0;  // k_c, or the robot's K-means cluster
  const ViewpointPool* pool = nullptr;
  std::vector<PriorityEntry> entries;  // sorted by joint descending
  std::vector<bool> in_cluster;        // K-means membership per viewpoint id; empty for DP-GMM
};

struct SimObserver {
  std::function<void(const PriorityRecord&)> on_priorities;
};

class Simulation {
 public:
  Simulation(const SimConfig& config, std::uint64_t seed, SimObserver observer = {});

  bool finished() const { return !metrics_.termination.empty(); }
  void step();

  int tick() const { return tick_; }
  const SimConfig& config() const { return config_; }
  const GroundTruthGrid& world() const { return world_; }
  const std::vector<RobotState>& robots() const { return robots_; }
  const std::vector<BeliefGrid>& beliefs() const { return beliefs_; }
  const BeliefGrid& union_belief() const { return union_; }
  const std::vector<Pose>& spawns() const { return spawns_; }
  const RunMetrics& metrics() const { return metrics_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const CellTraces& cell_traces() const { return cell_traces_; }
  const std::vector<bool>& reachable() const { return reachable_; }

  /// Robot ids grouped by communication component, each group ascending, groups ordered by
  /// their lowest id.
  std::vector<std::vector<RobotId>> components() const;

 private:
  void decide(const std::vector<RobotId>& members, const FrontierSet& frontiers, double& latency);
  void move(RobotState& r);
  void assign(RobotState& r, const Viewpoint& vp, Path path);
  void update_metrics();

  SimConfig config_;
  std::uint64_t seed_;
  SimObserver observer_;
  GroundTruthGrid world_;
  std::vector<Pose> spawns_;
  std::vector<RobotState> robots_;
  std::vector<BeliefGrid> beliefs_;
  BeliefGrid union_;
  std::vector<bool> reachable_;
  std::map<RobotId, MixtureModel> warm_;  // keyed by the lowest id of the component that fit it
  int tick_ = 0;
  RunMetrics metrics_;
  std::vector<TraceRecord> trace_;
  CellTraces cell_traces_;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TraceRecord> trace;
  CellTraces cell_traces;
  std::vector<Pose> spawns;
  BeliefGrid final_belief;
  GroundTruthGrid world;
};

RunResult run(const SimConfig& config, std::uint64_t seed, SimObserver observer = {});

}  // namespace fpx
