#include "fpx/kernels.hpp"

#include <algorithm>
#include <bit>
#include <unordered_map>
#include <cmath>
#include <limits>

#include <omp.h>

namespace fpx::kernels {

namespace {

constexpr int kBlock = 256;
constexpr double kTinyCount = 1e-300;

bool is_frontier(const GridGeometry& g, std::span<const CellState> cells, int c, int r) {
  if (cells[g.index(c, r)] != CellState::Free) return false;
  for (const auto& off : kNeighbors8) {
    const int nc = c + off[0];
    const int nr = r + off[1];
    if (g.in_bounds(nc, nr) && cells[g.index(nc, nr)] == CellState::Unknown) return true;
  }
  return false;
}

// One point of the E-step. Writes the K responsibilities and returns (logsumexp, sum r ln r).
inline std::pair<double, double> estep_point(const double* xn, const DiagComponents& c, double* rn) {
  const int k = c.k;
  const int d = c.d;
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    const double* m = c.mean.data() + static_cast<std::size_t>(j) * d;
    const double* p = c.precision.data() + static_cast<std::size_t>(j) * d;
    double q = 0.0;
    for (int a = 0; a < d; ++a) {
      const double diff = xn[a] - m[a];
      q += p[a] * diff * diff;
    }
    const double lr = c.log_const[j] - 0.5 * q;
    rn[j] = lr;
    mx = std::max(mx, lr);
  }
  double sum = 0.0;
  for (int j = 0; j < k; ++j) sum += std::exp(rn[j] - mx);
  const double lse = mx + std::log(sum);
  double weighted = 0.0;
  for (int j = 0; j < k; ++j) {
    const double lr = rn[j];
    const double r = std::exp(lr - lse);
    rn[j] = r;
    if (r > 0.0) weighted += r * (lr - lse);
  }
  return {lse, weighted};
}

void finish_stats(DiagStats& s, int k, int d) {
  for (int j = 0; j < k; ++j) {
    const double nk = s.count[j];
    for (int a = 0; a < d; ++a) {
      const std::size_t i = static_cast<std::size_t>(j) * d + a;
      s.mean[i] = nk > kTinyCount ? s.mean[i] / nk : 0.0;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------------------------

std::vector<CellIndex> serial::frontier_cells(const GridGeometry& g, std::span<const CellState> cells) {
  std::vector<CellIndex> out;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (is_frontier(g, cells, c, r)) out.push_back(g.index(c, r));
    }
  }
  return out;
}

std::vector<CellIndex> omp::frontier_cells(const GridGeometry& g, std::span<const CellState> cells) {
  std::vector<std::vector<CellIndex>> per_row(static_cast<std::size_t>(g.rows));
#pragma omp parallel for schedule(static) if (g.size() > 16384)
  for (int r = 0; r < g.rows; ++r) {
    auto& row = per_row[static_cast<std::size_t>(r)];
    for (int c = 0; c < g.cols; ++c) {
      if (is_frontier(g, cells, c, r)) row.push_back(g.index(c, r));
    }
  }
  std::vector<CellIndex> out;
  for (const auto& row : per_row) out.insert(out.end(), row.begin(), row.end());
  return out;
}

// ---------------------------------------------------------------------------------------------

std::uint32_t GainScratch::next_epoch() {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0u);
    epoch_ = 1;
  }
  return epoch_;
}

double predicted_gain(const BeliefGrid& belief, const SensorModel& sensor, std::span<const Pose> samples,
                      GainScratch& scratch) {
  const GridGeometry& g = belief.geometry();
  const std::uint32_t epoch = scratch.next_epoch();
  std::size_t revealed = 0;
  for (const Pose& pose : samples) {
    for (double angle : sensor.ray_angles(pose.yaw)) {
      cast_ray(g, pose.position(), angle, sensor.range, [&](CellIndex idx) {
        const CellState s = belief.state(idx);
        if (s == CellState::Occupied) return false;
        if (s == CellState::Unknown && scratch.mark(idx, epoch)) ++revealed;
        return true;
      });
    }
  }
  return static_cast<double>(revealed);
}

std::vector<CellIndex> visible_unknown(const BeliefGrid& belief, const SensorModel& sensor, const Pose& pose,
                                       GainScratch& scratch) {
  const GridGeometry& g = belief.geometry();
  const std::uint32_t epoch = scratch.next_epoch();
  std::vector<CellIndex> out;
  for (double angle : sensor.ray_angles(pose.yaw)) {
    cast_ray(g, pose.position(), angle, sensor.range, [&](CellIndex idx) {
      const CellState s = belief.state(idx);
      if (s == CellState::Occupied) return false;
      if (s == CellState::Unknown && scratch.mark(idx, epoch)) out.push_back(idx);
      return true;
    });
  }
  return out;
}

namespace {

struct PoseKey {
  std::uint64_t x, y, yaw;
  friend bool operator==(const PoseKey&, const PoseKey&) = default;
};

struct PoseKeyHash {
  std::size_t operator()(const PoseKey& k) const {
    std::uint64_t h = k.x * 0x9e3779b97f4a7c15ULL;
    h ^= k.y + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
    h ^= k.yaw + 0x94d049bb133111ebULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

PoseKey key_of(const Pose& p) {
  return {std::bit_cast<std::uint64_t>(p.x), std::bit_cast<std::uint64_t>(p.y), std::bit_cast<std::uint64_t>(p.yaw)};
}

// Distinct sample poses in first-seen order, and for every query the indices of its poses.
struct PoseTable {
  std::vector<Pose> poses;
  std::vector<std::vector<std::uint32_t>> refs;
};

PoseTable tabulate(std::span<const std::vector<Pose>> queries) {
  PoseTable t;
  std::unordered_map<PoseKey, std::uint32_t, PoseKeyHash> index;
  t.refs.resize(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (const Pose& p : queries[q]) {
      auto [it, fresh] = index.try_emplace(key_of(p), static_cast<std::uint32_t>(t.poses.size()));
      if (fresh) t.poses.push_back(p);
      t.refs[q].push_back(it->second);
    }
  }
  return t;
}

double union_size(const std::vector<std::vector<CellIndex>>& lists, std::span<const std::uint32_t> refs,
                  GainScratch& scratch) {
  if (refs.size() == 1) return static_cast<double>(lists[refs[0]].size());
  const std::uint32_t epoch = scratch.next_epoch();
  std::size_t n = 0;
  for (std::uint32_t r : refs) {
    for (CellIndex c : lists[r]) n += scratch.mark(c, epoch) ? 1 : 0;
  }
  return static_cast<double>(n);
}

}  // namespace

void serial::predicted_gains(const BeliefGrid& belief, const SensorModel& sensor,
                             std::span<const std::vector<Pose>> queries, std::span<double> out) {
  const PoseTable t = tabulate(queries);
  GainScratch scratch(belief.size());
  std::vector<std::vector<CellIndex>> lists(t.poses.size());
  for (std::size_t i = 0; i < t.poses.size(); ++i) lists[i] = visible_unknown(belief, sensor, t.poses[i], scratch);
  for (std::size_t q = 0; q < queries.size(); ++q) out[q] = union_size(lists, t.refs[q], scratch);
}

void omp::predicted_gains(const BeliefGrid& belief, const SensorModel& sensor,
                          std::span<const std::vector<Pose>> queries, std::span<double> out) {
  const PoseTable t = tabulate(queries);
  const auto np = static_cast<std::int64_t>(t.poses.size());
  const auto nq = static_cast<std::int64_t>(queries.size());
  std::vector<std::vector<CellIndex>> lists(t.poses.size());
#pragma omp parallel if (np > 8)
  {
    GainScratch scratch(belief.size());
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < np; ++i) {
      lists[static_cast<std::size_t>(i)] = visible_unknown(belief, sensor, t.poses[static_cast<std::size_t>(i)], scratch);
    }
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t q = 0; q < nq; ++q) {
      out[static_cast<std::size_t>(q)] = union_size(lists, t.refs[static_cast<std::size_t>(q)], scratch);
    }
  }
}

// ---------------------------------------------------------------------------------------------

EStepOutput serial::diag_estep(std::span<const double> x, int n, const DiagComponents& comps,
                               std::span<double> resp) {
  EStepOutput out;
  for (int i = 0; i < n; ++i) {
    const auto [lse, w] = estep_point(x.data() + static_cast<std::size_t>(i) * comps.d, comps,
                                      resp.data() + static_cast<std::size_t>(i) * comps.k);
    out.log_evidence += lse;
    out.neg_entropy += w;
  }
  return out;
}

EStepOutput omp::diag_estep(std::span<const double> x, int n, const DiagComponents& comps,
                            std::span<double> resp) {
  const int blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> lse_part(static_cast<std::size_t>(blocks), 0.0);
  std::vector<double> ent_part(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * comps.k > 20000)
  for (int b = 0; b < blocks; ++b) {
    const int end = std::min(n, (b + 1) * kBlock);
    double lse_sum = 0.0;
    double ent_sum = 0.0;
    for (int i = b * kBlock; i < end; ++i) {
      const auto [lse, w] = estep_point(x.data() + static_cast<std::size_t>(i) * comps.d, comps,
                                        resp.data() + static_cast<std::size_t>(i) * comps.k);
      lse_sum += lse;
      ent_sum += w;
    }
    lse_part[static_cast<std::size_t>(b)] = lse_sum;
    ent_part[static_cast<std::size_t>(b)] = ent_sum;
  }
  EStepOutput out;
  for (int b = 0; b < blocks; ++b) {
    out.log_evidence += lse_part[static_cast<std::size_t>(b)];
    out.neg_entropy += ent_part[static_cast<std::size_t>(b)];
  }
  return out;
}

DiagStats serial::diag_stats(std::span<const double> x, int n, int d, std::span<const double> resp, int k) {
  const std::size_t kd = static_cast<std::size_t>(k) * d;
  DiagStats s{std::vector<double>(k, 0.0), std::vector<double>(kd, 0.0), std::vector<double>(kd, 0.0)};
  for (int i = 0; i < n; ++i) {
    const double* xi = x.data() + static_cast<std::size_t>(i) * d;
    const double* ri = resp.data() + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      s.count[j] += ri[j];
      double* m = s.mean.data() + static_cast<std::size_t>(j) * d;
      for (int a = 0; a < d; ++a) m[a] += ri[j] * xi[a];
    }
  }
  finish_stats(s, k, d);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.data() + static_cast<std::size_t>(i) * d;
    const double* ri = resp.data() + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const double* m = s.mean.data() + static_cast<std::size_t>(j) * d;
      double* v = s.variance.data() + static_cast<std::size_t>(j) * d;
      for (int a = 0; a < d; ++a) {
        const double diff = xi[a] - m[a];
        v[a] += ri[j] * diff * diff;
      }
    }
  }
  for (int j = 0; j < k; ++j) {
    for (int a = 0; a < d; ++a) {
      const std::size_t i = static_cast<std::size_t>(j) * d + a;
      s.variance[i] = s.count[j] > kTinyCount ? s.variance[i] / s.count[j] : 0.0;
    }
  }
  return s;
}

DiagStats omp::diag_stats(std::span<const double> x, int n, int d, std::span<const double> resp, int k) {
  const std::size_t kd = static_cast<std::size_t>(k) * d;
  const int blocks = (n + kBlock - 1) / kBlock;
  const bool par = static_cast<long>(n) * k > 20000;
  DiagStats s{std::vector<double>(k, 0.0), std::vector<double>(kd, 0.0), std::vector<double>(kd, 0.0)};

  // Pass 1: counts and first moments, one partial per block.
  std::vector<double> cnt(static_cast<std::size_t>(blocks) * k, 0.0);
  std::vector<double> sum(static_cast<std::size_t>(blocks) * kd, 0.0);
#pragma omp parallel for schedule(static) if (par)
  for (int b = 0; b < blocks; ++b) {
    double* bc = cnt.data() + static_cast<std::size_t>(b) * k;
    double* bs = sum.data() + static_cast<std::size_t>(b) * kd;
    const int end = std::min(n, (b + 1) * kBlock);
    for (int i = b * kBlock; i < end; ++i) {
      const double* xi = x.data() + static_cast<std::size_t>(i) * d;
      const double* ri = resp.data() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) {
        bc[j] += ri[j];
        double* m = bs + static_cast<std::size_t>(j) * d;
        for (int a = 0; a < d; ++a) m[a] += ri[j] * xi[a];
      }
    }
  }
  for (int b = 0; b < blocks; ++b) {
    for (int j = 0; j < k; ++j) s.count[j] += cnt[static_cast<std::size_t>(b) * k + j];
    for (std::size_t i = 0; i < kd; ++i) s.mean[i] += sum[static_cast<std::size_t>(b) * kd + i];
  }
  finish_stats(s, k, d);

  // Pass 2: centered second moments.
  std::fill(sum.begin(), sum.end(), 0.0);
#pragma omp parallel for schedule(static) if (par)
  for (int b = 0; b < blocks; ++b) {
    double* bs = sum.data() + static_cast<std::size_t>(b) * kd;
    const int end = std::min(n, (b + 1) * kBlock);
    for (int i = b * kBlock; i < end; ++i) {
      const double* xi = x.data() + static_cast<std::size_t>(i) * d;
      const double* ri = resp.data() + static_cast<std::size_t>(i) * k;
      for (int j = 0; j < k; ++j) {
        const double* m = s.mean.data() + static_cast<std::size_t>(j) * d;
        double* v = bs + static_cast<std::size_t>(j) * d;
        for (int a = 0; a < d; ++a) {
          const double diff = xi[a] - m[a];
          v[a] += ri[j] * diff * diff;
        }
      }
    }
  }
  for (int b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < kd; ++i) s.variance[i] += sum[static_cast<std::size_t>(b) * kd + i];
  }
  for (int j = 0; j < k; ++j) {
    for (int a = 0; a < d; ++a) {
      const std::size_t i = static_cast<std::size_t>(j) * d + a;
      s.variance[i] = s.count[j] > kTinyCount ? s.variance[i] / s.count[j] : 0.0;
    }
  }
  return s;
}

}  // namespace fpx::kernels
