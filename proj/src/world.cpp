#include "fpx/world.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "fpx/rng.hpp"

namespace fpx {

namespace {

constexpr int kMaxAttemptsPerTree = 10000;

bool inside_any_patch(const std::vector<DensityPatch>& patches, Vec2 p) {
  return std::any_of(patches.begin(), patches.end(),
                     [&](const DensityPatch& dp) { return dp.area.contains(p); });
}

void rasterize(const GridGeometry& g, const Tree& t, std::vector<Terrain>& cells) {
  const double res = g.resolution;
  const int c0 = std::max(0, static_cast<int>(std::floor((t.center.x - t.radius) / res)));
  const int c1 = std::min(g.cols - 1, static_cast<int>(std::floor((t.center.x + t.radius) / res)));
  const int r0 = std::max(0, static_cast<int>(std::floor((t.center.y - t.radius) / res)));
  const int r1 = std::min(g.rows - 1, static_cast<int>(std::floor((t.center.y + t.radius) / res)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const CellIndex idx = g.index(c, r);
      if (distance(g.center(idx), t.center) <= t.radius) cells[idx] = Terrain::Occupied;
    }
  }
  // Trunks thinner than a cell still block the cell they stand in.
  if (auto idx = g.cell_at(t.center)) cells[*idx] = Terrain::Occupied;
}

}  // namespace

double Rect::distance_to(Vec2 p) const {
  const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
  const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
  return std::hypot(dx, dy);
}

void WorldSpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw InputError("world width and height must be > 0");
  if (!(resolution > 0.0)) throw InputError("world resolution must be > 0");
  if (!(tree_density >= 0.0)) throw InputError("tree_density must be >= 0");
  if (!(tree_radius_min >= 0.0) || tree_radius_min > tree_radius_max)
    throw InputError("tree_radius_range must satisfy 0 <= min <= max");
  for (const auto& p : density_patches) {
    if (!(p.density >= 0.0)) throw InputError("patch density must be >= 0");
    if (!(p.area.x1 > p.area.x0) || !(p.area.y1 > p.area.y0))
      throw InputError("patch rectangle must have positive area");
  }
  if (spawn_zone && (!(spawn_zone->x1 > spawn_zone->x0) || !(spawn_zone->y1 > spawn_zone->y0)))
    throw InputError("spawn zone must have positive area");
}

GridGeometry WorldSpec::geometry() const {
  // Guard against ceil(32 / 0.5) landing on 64.0000001.
  auto count = [&](double extent) {
    return static_cast<int>(std::ceil(extent / resolution - 1e-9));
  };
  return {count(width), count(height), resolution};
}

std::vector<DensityPatch> mixed_density_quadrants(double width, double height) {
  const double hx = width / 2.0;
  const double hy = height / 2.0;
  return {
      {{0.0, 0.0, hx, hy}, 0.10},
      {{hx, 0.0, width, hy}, 0.15},
      {{0.0, hy, hx, height}, 0.20},
      {{hx, hy, width, height}, 0.15},
  };
}

GroundTruthGrid::GroundTruthGrid(WorldSpec spec, std::vector<Terrain> cells, std::vector<Tree> trees)
    : spec_(std::move(spec)), geometry_(spec_.geometry()), cells_(std::move(cells)), trees_(std::move(trees)) {
  if (cells_.size() != geometry_.size()) throw InputError("cell count does not match world geometry");
}

std::size_t GroundTruthGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Terrain::Occupied));
}

std::size_t expected_tree_count(const WorldSpec& spec) {
  double patch_area = 0.0;
  std::size_t total = 0;
  for (const auto& p : spec.density_patches) {
    patch_area += p.area.area();
    total += static_cast<std::size_t>(std::llround(p.density * p.area.area()));
  }
  const double base_area = std::max(0.0, spec.width * spec.height - patch_area);
  return total + static_cast<std::size_t>(std::llround(spec.tree_density * base_area));
}

GroundTruthGrid generate_world(const WorldSpec& spec) {
  spec.validate();
  const GridGeometry g = spec.geometry();
  std::vector<Terrain> cells(g.size(), Terrain::Free);
  std::vector<Tree> trees;
  Rng rng(spec.seed);

  const Rect world{0.0, 0.0, spec.width, spec.height};

  auto place = [&](const Rect& region, std::size_t count, bool exclude_patches) {
    for (std::size_t i = 0; i < count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttemptsPerTree; ++attempt) {
        const Vec2 c{rng.uniform(region.x0, region.x1), rng.uniform(region.y0, region.y1)};
        const double r = rng.uniform(spec.tree_radius_min, spec.tree_radius_max);
        if (exclude_patches && inside_any_patch(spec.density_patches, c)) continue;
        // One cell of margin so rasterization never touches a spawn-zone cell.
        if (spec.spawn_zone && spec.spawn_zone->distance_to(c) <= r + g.resolution) continue;
        trees.push_back({c, r});
        placed = true;
        break;
      }
      if (!placed) {
        throw UnsatisfiableDensityError("could not place tree " + std::to_string(i + 1) + " of " +
                                        std::to_string(count) + " after " +
                                        std::to_string(kMaxAttemptsPerTree) + " attempts");
      }
    }
  };

  double patch_area = 0.0;
  for (const auto& p : spec.density_patches) patch_area += p.area.area();
  const double base_area = std::max(0.0, spec.width * spec.height - patch_area);
  place(world, static_cast<std::size_t>(std::llround(spec.tree_density * base_area)), true);
  for (const auto& p : spec.density_patches) {
    place(p.area, static_cast<std::size_t>(std::llround(p.density * p.area.area())), false);
  }

  for (const auto& t : trees) rasterize(g, t, cells);
  return GroundTruthGrid(spec, std::move(cells), std::move(trees));
}

std::vector<Pose> spawn_poses(const GroundTruthGrid& grid, int n_r, std::uint64_t seed, double robot_radius) {
  if (n_r < 1) throw SpawnError("team size must be >= 1");
  const GridGeometry& g = grid.geometry();
  const auto& zone = grid.spec().spawn_zone;

  std::vector<CellIndex> candidates;
  for (CellIndex idx = 0; idx < g.size(); ++idx) {
    if (grid.occupied(idx)) continue;
    if (zone && !zone->contains(g.center(idx))) continue;
    candidates.push_back(idx);
  }
  if (candidates.size() < static_cast<std::size_t>(n_r)) {
    throw SpawnError("only " + std::to_string(candidates.size()) + " free cells for " + std::to_string(n_r) +
                     " robots");
  }

  Rng rng(seed);
  rng.shuffle(candidates);
  std::vector<Pose> poses;
  const double clearance = 2.0 * robot_radius;
  for (CellIndex idx : candidates) {
    const Vec2 c = g.center(idx);
    const bool clear = std::all_of(poses.begin(), poses.end(),
                                   [&](const Pose& p) { return distance(p.position(), c) >= clearance; });
    if (!clear) continue;
    poses.push_back({c.x, c.y, 0.0});
    if (poses.size() == static_cast<std::size_t>(n_r)) return poses;
  }
  throw SpawnError("insufficient free space for " + std::to_string(n_r) + " robots with clearance " +
                   std::to_string(clearance) + " m");
}

void write_pgm(std::ostream& out, const GroundTruthGrid& grid) {
  const GridGeometry& g = grid.geometry();
  out << "P5\n" << g.cols << ' ' << g.rows << "\n255\n";
  for (int r = g.rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.cols; ++c) {
      out.put(static_cast<char>(grid.occupied(g.index(c, r)) ? 0 : 255));
    }
  }
}

}  // namespace fpx
