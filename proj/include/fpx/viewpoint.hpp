#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/kernels.hpp"
#include "fpx/mapping.hpp"

namespace fpx {

struct Path {
  std::vector<CellIndex> cells;  // start to goal, consecutive cells 8-adjacent
  double length = 0.0;           // meters
};

/// A candidate pose at a frontier cell with the predicted information gain of driving there.
struct Viewpoint {
  Pose pose;
  double gain = 0.0;  // bits
  RobotId owner = 0;
  CellIndex frontier_cell = 0;
  double path_length = kInf;  // meters from the owner's pose; kInf when unreachable

  bool reachable() const { return std::isfinite(path_length); }
};

/// Merged viewpoints of a communication component, sorted by frontier cell. A viewpoint's
/// position in `entries` is its id for prioritization and policy tie-breaking.
struct ViewpointPool {
  std::vector<Viewpoint> entries;
  std::vector<RobotId> origin_robots;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::vector<Vec2> positions() const;
  std::optional<std::size_t> find(CellIndex frontier_cell) const;
};

/// A* over Free cells, 8-connected, octile heuristic. Returns nullopt when the goal cannot be
/// reached. Throws PlanningError when the start cell is not Free.
std::optional<Path> plan_path(const BeliefGrid& belief, const Pose& start, const Pose& goal);

/// Single-source shortest paths over Free cells with the same move costs as plan_path. Used to
/// route to every frontier at once.
class DistanceField {
 public:
  DistanceField(const BeliefGrid& belief, const Pose& start);

  /// Path cost in meters, kInf when unreachable.
  double distance(CellIndex idx) const { return dist_[idx]; }
  std::optional<Path> path_to(CellIndex idx) const;

 private:
  GridGeometry geometry_;
  std::vector<double> dist_;
  std::vector<CellIndex> parent_;
  CellIndex source_ = 0;
};

/// Heading at each sensing stop: toward the next path cell, `final_yaw` at the destination.
/// Sensing stops are every ceil(L / (2 res))-th cell plus the destination.
std::vector<Pose> gain_samples(const GridGeometry& g, const Path& path, const SensorModel& sensor, double final_yaw);

/// H(predicted) - H(belief) as a magnitude: Unknown cells are assumed empty and every cell the
/// sensor would reveal along the path is counted once.
double information_gain(const BeliefGrid& belief, const Path& path, const SensorModel& sensor,
                        std::optional<double> final_yaw = std::nullopt);

/// Yaw of the frontier's view direction: toward the centroid of its Unknown 8-neighbors.
double frontier_yaw(const BeliefGrid& belief, CellIndex frontier_cell);

/// One viewpoint per frontier cell, routed from `from`.
std::vector<Viewpoint> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                           const SensorModel& sensor, RobotId owner, const Pose& from,
                                           kernels::Backend backend = kernels::Backend::OpenMP);

/// Same, reusing a distance field already computed from the owner's pose.
std::vector<Viewpoint> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                           const SensorModel& sensor, RobotId owner, const DistanceField& field,
                                           kernels::Backend backend = kernels::Backend::OpenMP);

/// One list per owner, all sharing a single batched gain evaluation.
std::vector<std::vector<Viewpoint>> generate_viewpoints(const BeliefGrid& belief, const FrontierSet& frontiers,
                                                        const SensorModel& sensor, std::span<const RobotId> owners,
                                                        std::span<const DistanceField* const> fields,
                                                        kernels::Backend backend = kernels::Backend::OpenMP);

/// Deduplicated union keyed by frontier cell. Duplicates keep the larger gain (lower owner on
/// ties).
ViewpointPool merge_pools(std::span<const std::vector<Viewpoint>> pools);

/// P(I|xi) = gain / sum of gains, uniform when all gains are zero.
std::vector<double> gain_probabilities(const ViewpointPool& pool);

/// One viewpoint per line: "owner x y yaw gain frontier_cell path_length".
void write_pool(std::ostream& out, const ViewpointPool& pool);
ViewpointPool read_pool(std::istream& in);

}  // namespace fpx
