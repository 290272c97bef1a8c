#include "fpx/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fpx/kernels.hpp"

namespace fpx {

std::size_t BeliefGrid::known_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](CellState s) { return s != CellState::Unknown; }));
}

void SensorModel::validate() const {
  if (!(range > 0.0)) throw InputError("sensor range must be > 0");
  if (!(fov > 0.0) || fov > kTwoPi + 1e-12) throw InputError("sensor fov must be in (0, 2*pi]");
  if (ray_count < 8) throw InputError("sensor ray_count must be >= 8");
}

std::vector<double> SensorModel::ray_angles(double yaw) const {
  std::vector<double> out(static_cast<std::size_t>(ray_count));
  const bool full = fov >= kTwoPi - 1e-12;
  for (int k = 0; k < ray_count; ++k) {
    out[static_cast<std::size_t>(k)] =
        full ? yaw + kTwoPi * k / ray_count : yaw - 0.5 * fov + fov * k / (ray_count - 1);
  }
  return out;
}

SensorModel SensorModel::with_default_rays(double range, double fov) {
  const int rays = std::max(8, static_cast<int>(std::lround(360.0 * fov / kTwoPi)));
  return {range, fov, rays};
}

std::size_t sense(const GroundTruthGrid& world, BeliefGrid& belief, const Pose& pose, const SensorModel& sensor) {
  const GridGeometry& g = world.geometry();
  if (!(belief.geometry() == g)) throw SensingError("belief geometry does not match the world");
  const auto cell = g.cell_at(pose.position());
  if (!cell) throw SensingError("pose outside the world");
  if (world.occupied(*cell)) throw SensingError("cannot sense from inside an obstacle");

  std::size_t revealed = 0;
  for (double angle : sensor.ray_angles(pose.yaw)) {
    cast_ray(g, pose.position(), angle, sensor.range, [&](CellIndex idx) {
      const bool hit = world.occupied(idx);
      if (!belief.known(idx)) {
        belief.observe(idx, hit ? CellState::Occupied : CellState::Free);
        ++revealed;
      }
      return !hit;
    });
  }
  return revealed;
}

double entropy(const BeliefGrid& belief) {
  auto h = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  double total = 0.0;
  for (CellIndex idx = 0; idx < belief.size(); ++idx) {
    const double p = belief.occupancy_probability(idx);
    total += h(p) + h(1.0 - p);
  }
  return total;
}

FrontierSet detect_frontiers(const BeliefGrid& belief) {
  FrontierSet f;
  f.cells = kernels::omp::frontier_cells(belief.geometry(), belief.cells());
  f.positions.reserve(f.cells.size());
  for (CellIndex idx : f.cells) f.positions.push_back(belief.geometry().center(idx));
  return f;
}

BeliefGrid merge_beliefs(const BeliefGrid& a, const BeliefGrid& b) {
  if (!(a.geometry() == b.geometry())) throw MergeError("cannot merge beliefs with different grid geometry");
  BeliefGrid out(a.geometry());
  for (CellIndex idx = 0; idx < a.size(); ++idx) {
    // Enum order Unknown < Free < Occupied makes the join a max.
    out.set(idx, std::max(a.state(idx), b.state(idx)));
  }
  return out;
}

void write_pgm(std::ostream& out, const BeliefGrid& belief) {
  const GridGeometry& g = belief.geometry();
  out << "P5\n" << g.cols << ' ' << g.rows << "\n255\n";
  for (int r = g.rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.cols; ++c) {
      unsigned char v = 128;
      switch (belief.state(g.index(c, r))) {
        case CellState::Free: v = 255; break;
        case CellState::Occupied: v = 0; break;
        default: break;
      }
      out.put(static_cast<char>(v));
    }
  }
}

}  // namespace fpx
