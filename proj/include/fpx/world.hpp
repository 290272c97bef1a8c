#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/grid.hpp"

namespace fpx {

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
  double distance_to(Vec2 p) const;

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct DensityPatch {
  Rect area;
  double density = 0.0;

  friend bool operator==(const DensityPatch&, const DensityPatch&) = default;
};

struct WorldSpec {
  double width = 32.0;
  double height = 32.0;
  double resolution = 0.5;
  double tree_density = 0.1;  // trees per m^2 outside any patch
  double tree_radius_min = 0.2;
  double tree_radius_max = 0.5;
  std::uint64_t seed = 0;
  std::vector<DensityPatch> density_patches;
  // Trees never touch this rectangle; spawn_poses samples inside it.
  std::optional<Rect> spawn_zone;

  void validate() const;
  GridGeometry geometry() const;

  friend bool operator==(const WorldSpec&, const WorldSpec&) = default;
};

/// Quadrant layout for mixed-density forests: sparse, mid, high, mid (SW, SE, NW, NE).
std::vector<DensityPatch> mixed_density_quadrants(double width, double height);

enum class Terrain : std::uint8_t { Free = 0, Occupied = 1 };

struct Tree {
  Vec2 center;
  double radius = 0.0;
};

class GroundTruthGrid {
 public:
  GroundTruthGrid(WorldSpec spec, std::vector<Terrain> cells, std::vector<Tree> trees);

  const WorldSpec& spec() const { return spec_; }
  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<Terrain>& cells() const { return cells_; }
  const std::vector<Tree>& trees() const { return trees_; }

  bool occupied(CellIndex idx) const { return cells_[idx] == Terrain::Occupied; }
  std::size_t occupied_count() const;

 private:
  WorldSpec spec_;
  GridGeometry geometry_;
  std::vector<Terrain> cells_;
  std::vector<Tree> trees_;
};

GroundTruthGrid generate_world(const WorldSpec& spec);

/// Number of tree centers generate_world places for a spec (per-region rounding summed).
std::size_t expected_tree_count(const WorldSpec& spec);

/// Collision-free starting poses with pairwise clearance of at least 2 * robot_radius.
/// Samples inside the spec's spawn zone when one is set, anywhere Free otherwise.
std::vector<Pose> spawn_poses(const GroundTruthGrid& grid, int n_r, std::uint64_t seed,
                              double robot_radius = 0.3);

/// Binary PGM (P5): 255 = Free, 0 = Occupied.
void write_pgm(std::ostream& out, const GroundTruthGrid& grid);

}  // namespace fpx
