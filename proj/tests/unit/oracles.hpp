#pragma once

// Independent reference implementations used as test oracles. None of these call into the
// library code they check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

#include "fpx/mapping.hpp"
#include "fpx/world.hpp"

namespace oracle {

using fpx::BeliefGrid;
using fpx::CellIndex;
using fpx::CellState;
using fpx::GridGeometry;

inline BeliefGrid random_belief(int cols, int rows, double p_unknown, double p_occupied, std::uint64_t seed,
                                double resolution = 1.0) {
  BeliefGrid b(GridGeometry{cols, rows, resolution});
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (CellIndex i = 0; i < b.size(); ++i) {
    const double r = u(gen);
    b.set(i, r < p_unknown ? CellState::Unknown : r < p_unknown + p_occupied ? CellState::Occupied : CellState::Free);
  }
  return b;
}

/// Exhaustive double loop over cells and their 8 neighbors.
inline std::vector<CellIndex> frontiers(const BeliefGrid& b) {
  const GridGeometry& g = b.geometry();
  std::vector<CellIndex> out;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (b.state(g.index(c, r)) != CellState::Free) continue;
      bool unknown_near = false;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nc = c + dc, nr = r + dr;
          if (nc < 0 || nr < 0 || nc >= g.cols || nr >= g.rows) continue;
          if (b.state(g.index(nc, nr)) == CellState::Unknown) unknown_near = true;
        }
      }
      if (unknown_near) out.push_back(g.index(c, r));
    }
  }
  return out;
}

/// Cell-by-cell binary entropy sum, in bits.
inline double entropy(const BeliefGrid& b) {
  double h = 0.0;
  for (CellIndex i = 0; i < b.size(); ++i) {
    const double p = b.occupancy_probability(i);
    if (p > 0.0 && p < 1.0) h -= p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p);
  }
  return h;
}

/// Path cost as a count of straight and diagonal moves. Costs a + b*sqrt(2) are equal only when
/// the counts are, so comparing counts is an exact comparison of path lengths.
struct MoveCount {
  int straight = 0;
  int diagonal = 0;
  long double value() const { return straight + diagonal * std::sqrt(2.0L); }
  friend bool operator==(const MoveCount&, const MoveCount&) = default;
};

/// Dijkstra over Free cells, 8-connected, no heuristic. nullopt when unreachable.
inline std::optional<MoveCount> dijkstra(const BeliefGrid& b, CellIndex start, CellIndex goal) {
  const GridGeometry& g = b.geometry();
  const long double inf = std::numeric_limits<long double>::infinity();
  std::vector<long double> dist(g.size(), inf);
  std::vector<MoveCount> moves(g.size());
  using Item = std::pair<long double, CellIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[start] = 0.0L;
  open.push({0.0L, start});
  while (!open.empty()) {
    const auto [d, cur] = open.top();
    open.pop();
    if (d > dist[cur]) continue;
    if (cur == goal) return moves[cur];
    const int c = g.col(cur), r = g.row(cur);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nc = c + dc, nr = r + dr;
        if (nc < 0 || nr < 0 || nc >= g.cols || nr >= g.rows) continue;
        const CellIndex nb = g.index(nc, nr);
        if (b.state(nb) != CellState::Free) continue;
        MoveCount m = moves[cur];
        (dc != 0 && dr != 0 ? m.diagonal : m.straight) += 1;
        const long double nd = m.value();
        if (nd < dist[nb]) {
          dist[nb] = nd;
          moves[nb] = m;
          open.push({nd, nb});
        }
      }
    }
  }
  return std::nullopt;
}

/// A world whose Occupied cells are exactly the belief's Occupied cells; Unknown cells are Free.
/// Sensing in it realizes the free-space assumption of gain prediction.
inline fpx::GroundTruthGrid free_space_world(const BeliefGrid& b) {
  const GridGeometry& g = b.geometry();
  fpx::WorldSpec spec;
  spec.width = g.width();
  spec.height = g.height();
  spec.resolution = g.resolution;
  spec.tree_density = 0.0;
  std::vector<fpx::Terrain> cells(g.size(), fpx::Terrain::Free);
  for (CellIndex i = 0; i < g.size(); ++i) {
    if (b.state(i) == CellState::Occupied) cells[i] = fpx::Terrain::Occupied;
  }
  return fpx::GroundTruthGrid(spec, std::move(cells), {});
}

inline fpx::GroundTruthGrid world_from_mask(int cols, int rows, double resolution, const std::vector<bool>& occupied) {
  fpx::WorldSpec spec;
  spec.width = cols * resolution;
  spec.height = rows * resolution;
  spec.resolution = resolution;
  spec.tree_density = 0.0;
  std::vector<fpx::Terrain> cells(static_cast<std::size_t>(cols) * rows, fpx::Terrain::Free);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (occupied[i]) cells[i] = fpx::Terrain::Occupied;
  }
  return fpx::GroundTruthGrid(spec, std::move(cells), {});
}

}  // namespace oracle
