#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/grid.hpp"
#include "fpx/world.hpp"

namespace fpx {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

/// A robot's tri-state occupancy belief. Sensing is noise-free, so p(c) is 0.5, 0 or 1.
class BeliefGrid {
 public:
  BeliefGrid() = default;
  explicit BeliefGrid(GridGeometry geometry)
      : geometry_(geometry), cells_(geometry.size(), CellState::Unknown) {}

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t size() const { return cells_.size(); }

  CellState state(CellIndex idx) const { return cells_[idx]; }
  bool known(CellIndex idx) const { return cells_[idx] != CellState::Unknown; }
  bool free(CellIndex idx) const { return cells_[idx] == CellState::Free; }

  /// Observed cells never revert; writing Unknown over a known cell is ignored.
  void observe(CellIndex idx, CellState s) {
    if (s != CellState::Unknown && cells_[idx] == CellState::Unknown) cells_[idx] = s;
  }
  /// Raw write, used by merge and tests that build beliefs by hand.
  void set(CellIndex idx, CellState s) { cells_[idx] = s; }

  double occupancy_probability(CellIndex idx) const {
    switch (cells_[idx]) {
      case CellState::Free: return 0.0;
      case CellState::Occupied: return 1.0;
      default: return 0.5;
    }
  }

  std::size_t known_count() const;
  const std::vector<CellState>& cells() const { return cells_; }

  friend bool operator==(const BeliefGrid&, const BeliefGrid&) = default;

 private:
  GridGeometry geometry_;
  std::vector<CellState> cells_;
};

struct SensorModel {
  double range = 5.0;       // L, meters
  double fov = kTwoPi;      // theta, radians
  int ray_count = 360;

  void validate() const;
  std::vector<double> ray_angles(double yaw) const;

  /// 360 rays over a full circle, scaled proportionally for narrower fields of view.
  static SensorModel with_default_rays(double range, double fov);
};

struct FrontierSet {
  std::vector<CellIndex> cells;
  std::vector<Vec2> positions;

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
};

/// Walks every cell a ray from `origin` at `angle` crosses (supercover traversal) whose entry
/// distance is within `range`. `visit(idx)` returns false to stop the ray.
template <class Visit>
void cast_ray(const GridGeometry& g, Vec2 origin, double angle, double range, Visit&& visit) {
  const double res = g.resolution;
  int col = static_cast<int>(std::floor(origin.x / res));
  int row = static_cast<int>(std::floor(origin.y / res));
  if (!g.in_bounds(col, row)) return;
  if (!visit(g.index(col, row))) return;

  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int step_c = dx > 0 ? 1 : -1;
  const int step_r = dy > 0 ? 1 : -1;
  constexpr double kTiny = 1e-12;
  const double t_delta_x = std::abs(dx) < kTiny ? kInf : res / std::abs(dx);
  const double t_delta_y = std::abs(dy) < kTiny ? kInf : res / std::abs(dy);
  double t_max_x = std::abs(dx) < kTiny ? kInf
                   : dx > 0 ? ((col + 1) * res - origin.x) / dx
                            : (col * res - origin.x) / dx;
  double t_max_y = std::abs(dy) < kTiny ? kInf
                   : dy > 0 ? ((row + 1) * res - origin.y) / dy
                            : (row * res - origin.y) / dy;

  while (true) {
    if (std::abs(t_max_x - t_max_y) <= 1e-12 * res) {
      // Exact corner crossing: both side cells are touched before the diagonal one.
      const double t = t_max_x;
      if (t > range) return;
      if (g.in_bounds(col + step_c, row) && !visit(g.index(col + step_c, row))) return;
      if (g.in_bounds(col, row + step_r) && !visit(g.index(col, row + step_r))) return;
      col += step_c;
      row += step_r;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    } else if (t_max_x < t_max_y) {
      if (t_max_x > range) return;
      col += step_c;
      t_max_x += t_delta_x;
    } else {
      if (t_max_y > range) return;
      row += step_r;
      t_max_y += t_delta_y;
    }
    if (!g.in_bounds(col, row)) return;
    if (!visit(g.index(col, row))) return;
  }
}

/// Raycasts the sensor from `pose` against the ground truth and writes the observations into
/// `belief`. Returns the number of cells that changed from Unknown to known.
std::size_t sense(const GroundTruthGrid& world, BeliefGrid& belief, const Pose& pose, const SensorModel& sensor);

/// Shannon entropy in bits, -sum[p log2 p + (1-p) log2 (1-p)] with 0 log 0 = 0.
double entropy(const BeliefGrid& belief);

/// Free cells with at least one Unknown 8-neighbor, row-major.
FrontierSet detect_frontiers(const BeliefGrid& belief);

/// Per-cell join: known beats Unknown, Occupied beats Free.
BeliefGrid merge_beliefs(const BeliefGrid& a, const BeliefGrid& b);

/// Binary PGM (P5): 255 = Free, 0 = Occupied, 128 = Unknown.
void write_pgm(std::ostream& out, const BeliefGrid& belief);

}  // namespace fpx
