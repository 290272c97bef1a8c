#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "fpx/common.hpp"

namespace fpx {

/// Row-major cell layout shared by ground truth and belief grids. Cell (col, row) spans
/// [col*res, (col+1)*res) x [row*res, (row+1)*res) in world meters; the origin is (0, 0).
struct GridGeometry {
  int cols = 0;
  int rows = 0;
  double resolution = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows); }
  bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < cols && row < rows; }
  CellIndex index(int col, int row) const {
    return static_cast<CellIndex>(row) * static_cast<CellIndex>(cols) + static_cast<CellIndex>(col);
  }
  int col(CellIndex idx) const { return static_cast<int>(idx % static_cast<CellIndex>(cols)); }
  int row(CellIndex idx) const { return static_cast<int>(idx / static_cast<CellIndex>(cols)); }

  Vec2 center(CellIndex idx) const {
    return {(col(idx) + 0.5) * resolution, (row(idx) + 0.5) * resolution};
  }

  std::optional<CellIndex> cell_at(Vec2 p) const {
    const int c = static_cast<int>(std::floor(p.x / resolution));
    const int r = static_cast<int>(std::floor(p.y / resolution));
    if (!in_bounds(c, r)) return std::nullopt;
    return index(c, r);
  }

  double width() const { return cols * resolution; }
  double height() const { return rows * resolution; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// 8-neighborhood offsets (dcol, drow), straight moves first.
inline constexpr std::array<std::array<int, 2>, 8> kNeighbors8 = {{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1},
}};

}  // namespace fpx
