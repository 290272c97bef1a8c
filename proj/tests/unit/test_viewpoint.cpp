#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fpx/viewpoint.hpp"
#include "oracles.hpp"

using namespace fpx;

namespace {

BeliefGrid all_free(int cols, int rows, double res = 1.0) {
  BeliefGrid b(GridGeometry{cols, rows, res});
  for (CellIndex i = 0; i < b.size(); ++i) b.set(i, CellState::Free);
  return b;
}

Pose at(const GridGeometry& g, int c, int r, double yaw = 0.0) {
  const Vec2 p = g.center(g.index(c, r));
  return {p.x, p.y, yaw};
}

Viewpoint vp(CellIndex cell, double gain, RobotId owner = 0) {
  Viewpoint v;
  v.frontier_cell = cell;
  v.gain = gain;
  v.owner = owner;
  v.pose = {static_cast<double>(cell), 0.0, 0.0};
  v.path_length = 1.0;
  return v;
}

ViewpointPool pool_of(std::vector<double> gains) {
  std::vector<Viewpoint> list;
  for (std::size_t i = 0; i < gains.size(); ++i) list.push_back(vp(i, gains[i]));
  const std::vector<std::vector<Viewpoint>> one{list};
  return merge_pools(one);
}

// Newly known cells when the sensor runs along `samples` in a world where Unknown is empty.
std::size_t revealed_by_sensing(const BeliefGrid& belief, std::span<const Pose> samples, const SensorModel& s) {
  const auto world = oracle::free_space_world(belief);
  BeliefGrid copy = belief;
  std::size_t n = 0;
  for (const Pose& p : samples) n += sense(world, copy, p, s);
  return n;
}

}  // namespace

TEST(Viewpoints, OnePerFrontier) {
  // A 5-cell free strip in an unknown grid: every strip cell is a frontier.
  BeliefGrid b(GridGeometry{9, 5, 1.0});
  for (int c = 2; c < 7; ++c) b.set(b.geometry().index(c, 2), CellState::Free);
  const auto f = detect_frontiers(b);
  ASSERT_EQ(f.size(), 5u);
  const auto vps = generate_viewpoints(b, f, SensorModel{3.0, kTwoPi, 360}, 1, at(b.geometry(), 2, 2));
  ASSERT_EQ(vps.size(), 5u);
  for (std::size_t i = 0; i < vps.size(); ++i) {
    EXPECT_EQ(vps[i].frontier_cell, f.cells[i]);
    EXPECT_EQ(vps[i].owner, 1);
    EXPECT_TRUE(vps[i].reachable());
    EXPECT_GE(vps[i].gain, 0.0);
    EXPECT_TRUE(b.free(*b.geometry().cell_at(vps[i].pose.position())));
  }
}

TEST(Viewpoints, EmptyFrontiersGiveEmptyList) {
  const auto b = all_free(6, 6);
  EXPECT_TRUE(generate_viewpoints(b, detect_frontiers(b), SensorModel{}, 0, at(b.geometry(), 1, 1)).empty());
}

TEST(Viewpoints, YawFacesUnknownNeighbors) {
  auto b = all_free(5, 5);
  const auto& g = b.geometry();
  b.set(g.index(3, 2), CellState::Unknown);
  EXPECT_DOUBLE_EQ(frontier_yaw(b, g.index(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(frontier_yaw(b, g.index(2, 1)), std::atan2(1.0, 1.0));
  b.set(g.index(3, 2), CellState::Free);
  b.set(g.index(2, 3), CellState::Unknown);
  EXPECT_DOUBLE_EQ(frontier_yaw(b, g.index(2, 2)), kPi / 2);
}

TEST(PlanPath, StartEqualsGoal) {
  const auto b = all_free(4, 4);
  const auto p = plan_path(b, at(b.geometry(), 1, 2), at(b.geometry(), 1, 2));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->cells.size(), 1u);
  EXPECT_EQ(p->length, 0.0);
}

TEST(PlanPath, StraightCorridor) {
  for (int k : {2, 5, 17}) {
    BeliefGrid b(GridGeometry{k, 3, 0.5});
    for (int c = 0; c < k; ++c) b.set(b.geometry().index(c, 1), CellState::Free);
    const auto p = plan_path(b, at(b.geometry(), 0, 1), at(b.geometry(), k - 1, 1));
    ASSERT_TRUE(p);
    EXPECT_EQ(p->cells.size(), static_cast<std::size_t>(k));
    EXPECT_DOUBLE_EQ(p->length, (k - 1) * 0.5);
  }
}

TEST(PlanPath, StartNotFreeFails) {
  auto b = all_free(4, 4);
  b.set(0, CellState::Occupied);
  EXPECT_THROW(plan_path(b, at(b.geometry(), 0, 0), at(b.geometry(), 3, 3)), PlanningError);
  b.set(0, CellState::Unknown);
  EXPECT_THROW(plan_path(b, at(b.geometry(), 0, 0), at(b.geometry(), 3, 3)), PlanningError);
}

TEST(PlanPath, WalledOffGoalIsUnreachable) {
  auto b = all_free(7, 7);
  const auto& g = b.geometry();
  for (int r = 0; r < 7; ++r) b.set(g.index(3, r), CellState::Occupied);
  EXPECT_FALSE(plan_path(b, at(g, 0, 0), at(g, 6, 6)));
  EXPECT_FALSE(std::isfinite(DistanceField(b, at(g, 0, 0)).distance(g.index(6, 6))));
}

TEST(PlanPath, MatchesDijkstraOnRandomGrids) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = oracle::random_belief(32, 32, 0.0, 0.3, 1000 + trial);
    const auto& g = b.geometry();
    std::vector<CellIndex> free;
    for (CellIndex i = 0; i < b.size(); ++i) {
      if (b.free(i)) free.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const CellIndex s = free[pick(gen)], t = free[pick(gen)];
    const auto p = plan_path(b, at(g, g.col(s), g.row(s)), at(g, g.col(t), g.row(t)));
    const auto ref = oracle::dijkstra(b, s, t);
    ASSERT_EQ(p.has_value(), ref.has_value()) << trial;
    if (!p) continue;
    oracle::MoveCount moves;
    for (std::size_t i = 1; i < p->cells.size(); ++i) {
      const bool diag = g.col(p->cells[i]) != g.col(p->cells[i - 1]) && g.row(p->cells[i]) != g.row(p->cells[i - 1]);
      (diag ? moves.diagonal : moves.straight) += 1;
      EXPECT_LE(std::abs(g.col(p->cells[i]) - g.col(p->cells[i - 1])), 1);
      EXPECT_LE(std::abs(g.row(p->cells[i]) - g.row(p->cells[i - 1])), 1);
      EXPECT_TRUE(b.free(p->cells[i]));
    }
    EXPECT_EQ(moves, *ref) << trial;
    EXPECT_NEAR(DistanceField(b, at(g, g.col(s), g.row(s))).distance(t), p->length, 1e-9);
  }
}

TEST(Gain, ObservedRegionGivesZero) {
  const auto b = all_free(20, 20);
  const auto p = plan_path(b, at(b.geometry(), 2, 2), at(b.geometry(), 15, 12));
  ASSERT_TRUE(p);
  EXPECT_EQ(information_gain(b, *p, SensorModel{5.0, kTwoPi, 360}), 0.0);
}

TEST(Gain, StationaryPoseRevealsPlacedUnknownCells) {
  auto b = all_free(21, 21);
  const auto& g = b.geometry();
  const int cells[][2] = {{12, 10}, {8, 8}, {10, 13}, {14, 14}, {6, 11}};
  for (const auto& c : cells) b.set(g.index(c[0], c[1]), CellState::Unknown);
  const SensorModel s{6.0, kTwoPi, 360};
  Path here{{g.index(10, 10)}, 0.0};
  EXPECT_EQ(information_gain(b, here, s, 0.0), 5.0);
  const Pose pose = at(g, 10, 10);
  EXPECT_EQ(information_gain(b, here, s, 0.0), static_cast<double>(revealed_by_sensing(b, {&pose, 1}, s)));
}

TEST(Gain, EqualsRaycastOracleOnRandomBeliefs) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto b = oracle::random_belief(30, 30, 0.35, 0.1, 500 + trial, 0.5);
    const auto& g = b.geometry();
    std::vector<CellIndex> free;
    for (CellIndex i = 0; i < b.size(); ++i) {
      if (b.free(i)) free.push_back(i);
    }
    const CellIndex c = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(gen)];
    const SensorModel s = SensorModel::with_default_rays(4.0, trial % 2 ? kTwoPi : 1.4);
    const double yaw = std::uniform_real_distribution<double>(-kPi, kPi)(gen);
    const Pose pose = at(g, g.col(c), g.row(c), yaw);
    const Path here{{c}, 0.0};
    EXPECT_EQ(information_gain(b, here, s, yaw), static_cast<double>(revealed_by_sensing(b, {&pose, 1}, s)));
  }
}

TEST(Gain, DisjointRegionsAreAdditive) {
  // Two rooms separated by a wall, each with its own unknown pocket.
  auto b = all_free(30, 10);
  const auto& g = b.geometry();
  for (int r = 0; r < 10; ++r) b.set(g.index(15, r), CellState::Occupied);
  for (int c = 3; c < 6; ++c) b.set(g.index(c, 7), CellState::Unknown);
  for (int c = 22; c < 26; ++c) b.set(g.index(c, 2), CellState::Unknown);
  const SensorModel s{8.0, kTwoPi, 360};
  const auto left = plan_path(b, at(g, 1, 1), at(g, 6, 4));
  const auto right = plan_path(b, at(g, 28, 8), at(g, 20, 5));
  ASSERT_TRUE(left && right);
  const double gl = information_gain(b, *left, s);
  const double gr = information_gain(b, *right, s);
  EXPECT_EQ(gl, 3.0);
  EXPECT_EQ(gr, 4.0);
  // Both paths in one sample set: the union is the sum.
  auto samples = gain_samples(g, *left, s, 0.0);
  const auto rs = gain_samples(g, *right, s, 0.0);
  samples.insert(samples.end(), rs.begin(), rs.end());
  kernels::GainScratch scratch(b.size());
  EXPECT_EQ(kernels::predicted_gain(b, s, samples, scratch), gl + gr);
}

TEST(Gain, ExecutingPathRealizesPrediction) {
  // World obstacles inside the visible region are already known, so the prediction is exact.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto b = oracle::random_belief(24, 24, 0.0, 0.12, seed, 0.5);
    const auto& g = b.geometry();
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> side(0, 23);
    for (int k = 0; k < 200; ++k) {
      const CellIndex i = g.index(side(gen), side(gen));
      if (b.free(i)) b.set(i, CellState::Unknown);
    }
    std::vector<CellIndex> free;
    for (CellIndex i = 0; i < b.size(); ++i) {
      if (b.free(i)) free.push_back(i);
    }
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const CellIndex s = free[pick(gen)], t = free[pick(gen)];
    const auto path = plan_path(b, at(g, g.col(s), g.row(s)), at(g, g.col(t), g.row(t)));
    if (!path) continue;
    const SensorModel sensor{3.0, kTwoPi, 360};
    const auto samples = gain_samples(g, *path, sensor, 0.5);
    kernels::GainScratch scratch(b.size());
    const double predicted = kernels::predicted_gain(b, sensor, samples, scratch);

    const auto world = oracle::free_space_world(b);
    BeliefGrid after = b;
    for (const Pose& p : samples) sense(world, after, p, sensor);
    EXPECT_DOUBLE_EQ(entropy(b) - entropy(after), predicted) << seed;
  }
}

TEST(Gain, SampleSpacingFollowsSensorRange) {
  const auto b = all_free(40, 3);
  const auto path = plan_path(b, at(b.geometry(), 0, 1), at(b.geometry(), 39, 1));
  ASSERT_TRUE(path);
  // stride ceil(5 / (2 * 1)) = 3 over 39 moves: stops 0, 3, ..., 36 plus the destination.
  const auto samples = gain_samples(b.geometry(), *path, SensorModel{5.0, kTwoPi, 360}, 1.0);
  ASSERT_EQ(samples.size(), 14u);
  EXPECT_DOUBLE_EQ(samples.back().x, 39.5);
  EXPECT_DOUBLE_EQ(samples.back().yaw, 1.0);
  EXPECT_DOUBLE_EQ(samples.front().yaw, 0.0);
}

TEST(Gain, BatchedEqualsDirectEvaluation) {
  const auto b = oracle::random_belief(40, 40, 0.4, 0.1, 9, 0.5);
  const auto f = detect_frontiers(b);
  const auto& g = b.geometry();
  CellIndex start = 0;
  while (!b.free(start)) ++start;
  const SensorModel s{4.0, kTwoPi, 360};
  for (auto backend : {kernels::Backend::Serial, kernels::Backend::OpenMP}) {
    const auto vps = generate_viewpoints(b, f, s, 0, at(g, g.col(start), g.row(start)), backend);
    const DistanceField field(b, at(g, g.col(start), g.row(start)));
    for (const auto& v : vps) {
      const auto path = field.path_to(v.frontier_cell);
      const double direct = path ? information_gain(b, *path, s, v.pose.yaw)
                                 : information_gain(b, Path{{v.frontier_cell}, 0.0}, s, v.pose.yaw);
      EXPECT_EQ(v.gain, direct);
    }
  }
}

TEST(GainProbabilities, HandNormalization) {
  const auto p = gain_probabilities(pool_of({3, 1}));
  EXPECT_DOUBLE_EQ(p[0], 0.75);
  EXPECT_DOUBLE_EQ(p[1], 0.25);
  EXPECT_EQ(gain_probabilities(pool_of({4})), std::vector<double>{1.0});
  const auto q = gain_probabilities(pool_of({2, 2, 4, 8}));
  const std::vector<double> expected{0.125, 0.125, 0.25, 0.5};
  EXPECT_EQ(q, expected);
}

TEST(GainProbabilities, ZeroGainsFallBackToUniform) {
  EXPECT_EQ(gain_probabilities(pool_of({0, 0, 0, 0})), (std::vector<double>(4, 0.25)));
  EXPECT_THROW(gain_probabilities(ViewpointPool{}), PrioritizationError);
}

TEST(GainProbabilities, SumToOneAndScaleInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> gains(1 + trial % 40);
    for (double& x : gains) x = std::floor(u(gen));
    const auto p = gain_probabilities(pool_of(gains));
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double& x : gains) x *= 3.7;
    const auto q = gain_probabilities(pool_of(gains));
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-15);
  }
}

TEST(MergePools, Cases) {
  const std::vector<std::vector<Viewpoint>> single{{vp(1, 2.0), vp(4, 1.0)}};
  EXPECT_EQ(merge_pools(single).size(), 2u);

  const std::vector<std::vector<Viewpoint>> dup{{vp(7, 3.0, 0)}, {vp(7, 5.0, 1)}};
  const auto m = merge_pools(dup);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.entries[0].gain, 5.0);
  EXPECT_EQ(m.entries[0].owner, 1);
  EXPECT_EQ(m.origin_robots, (std::vector<RobotId>{0, 1}));

  std::vector<Viewpoint> a, b;
  for (CellIndex i = 0; i < 4; ++i) a.push_back(vp(i, 1.0, 0));
  for (CellIndex i = 10; i < 16; ++i) b.push_back(vp(i, 1.0, 1));
  const std::vector<std::vector<Viewpoint>> disjoint{a, b};
  const auto d = merge_pools(disjoint);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.find(12), std::optional<std::size_t>{6});
  EXPECT_FALSE(d.find(5));
}

TEST(MergePools, EqualGainDuplicateKeepsLowerOwner) {
  const std::vector<std::vector<Viewpoint>> dup{{vp(3, 2.0, 4)}, {vp(3, 2.0, 2)}};
  EXPECT_EQ(merge_pools(dup).entries[0].owner, 2);
}

TEST(Pool, TextRoundTrip) {
  std::vector<Viewpoint> list{vp(2, 1.5, 0), vp(9, 0.25, 3)};
  list[1].path_length = kInf;
  list[0].pose.yaw = 0.1234567890123;
  const std::vector<std::vector<Viewpoint>> one{list};
  const auto pool = merge_pools(one);
  std::stringstream ss;
  write_pool(ss, pool);
  const auto back = read_pool(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.entries[0].pose, pool.entries[0].pose);
  EXPECT_EQ(back.entries[1].gain, 0.25);
  EXPECT_FALSE(back.entries[1].reachable());
  std::istringstream bad("1 2 3\n");
  EXPECT_THROW(read_pool(bad), InputError);
}
