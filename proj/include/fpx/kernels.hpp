#pragma once

// Data-parallel inner loops of the pipeline. Each kernel has a plain serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp` with the same signature. The serial
// versions are the test oracles; the OpenMP versions produce identical results independent of the
// thread count (per-item work is identical, reductions are combined in a fixed block order).

#include <cstdint>
#include <span>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/grid.hpp"
#include "fpx/mapping.hpp"

namespace fpx::kernels {

enum class Backend { Serial, OpenMP };

// ---------------------------------------------------------------------------------------------
// Frontier scan

namespace serial {
std::vector<CellIndex> frontier_cells(const GridGeometry& g, std::span<const CellState> cells);
}
namespace omp {
std::vector<CellIndex> frontier_cells(const GridGeometry& g, std::span<const CellState> cells);
}

// ---------------------------------------------------------------------------------------------
// Predicted information gain. A query is the list of sensor poses sampled along one path; the
// gain is the number of Unknown cells the sensor would reveal if Unknown space were empty
// (one bit each). Cells seen from several poses of the same query are counted once.

class GainScratch {
 public:
  explicit GainScratch(std::size_t cells) : stamp_(cells, 0) {}
  std::uint32_t next_epoch();
  bool mark(CellIndex idx, std::uint32_t epoch) {
    if (stamp_[idx] == epoch) return false;
    stamp_[idx] = epoch;
    return true;
  }

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

/// Direct evaluation of one query: raycast every sample pose.
double predicted_gain(const BeliefGrid& belief, const SensorModel& sensor, std::span<const Pose> samples,
                      GainScratch& scratch);

/// Unknown cells one sensor pose would reveal, each listed once, in ray order.
std::vector<CellIndex> visible_unknown(const BeliefGrid& belief, const SensorModel& sensor, const Pose& pose,
                                       GainScratch& scratch);

// Batched evaluation. Queries routed through one distance field share path prefixes and hence
// sample poses, so each distinct pose is raycast once and queries take the union of the cached
// cell lists. Results equal predicted_gain on every query.

namespace serial {
void predicted_gains(const BeliefGrid& belief, const SensorModel& sensor,
                     std::span<const std::vector<Pose>> queries, std::span<double> out);
}
namespace omp {
void predicted_gains(const BeliefGrid& belief, const SensorModel& sensor,
                     std::span<const std::vector<Pose>> queries, std::span<double> out);
}

// ---------------------------------------------------------------------------------------------
// Diagonal-covariance mixture E-step and weighted sufficient statistics. Data is row-major n x d.

/// Per-component terms of the expected log-likelihood: log rho_nk = log_const[k]
///   - 0.5 * sum_j precision[k*d + j] * (x_nj - mean[k*d + j])^2.
struct DiagComponents {
  int k = 0;
  int d = 0;
  std::span<const double> log_const;
  std::span<const double> mean;
  std::span<const double> precision;
};

struct EStepOutput {
  double log_evidence = 0.0;        // sum_n logsumexp_k log rho_nk
  double neg_entropy = 0.0;         // sum_nk r_nk ln r_nk
};

namespace serial {
EStepOutput diag_estep(std::span<const double> x, int n, const DiagComponents& comps, std::span<double> resp);
}
namespace omp {
EStepOutput diag_estep(std::span<const double> x, int n, const DiagComponents& comps, std::span<double> resp);
}

/// Weighted counts, means and (biased) variances per component. Components with a negligible
/// count get mean 0 and variance 0.
struct DiagStats {
  std::vector<double> count;     // K
  std::vector<double> mean;      // K x d
  std::vector<double> variance;  // K x d
};

namespace serial {
DiagStats diag_stats(std::span<const double> x, int n, int d, std::span<const double> resp, int k);
}
namespace omp {
DiagStats diag_stats(std::span<const double> x, int n, int d, std::span<const double> resp, int k);
}

inline EStepOutput diag_estep(Backend b, std::span<const double> x, int n, const DiagComponents& c,
                              std::span<double> resp) {
  return b == Backend::OpenMP ? omp::diag_estep(x, n, c, resp) : serial::diag_estep(x, n, c, resp);
}
inline DiagStats diag_stats(Backend b, std::span<const double> x, int n, int d, std::span<const double> resp,
                            int k) {
  return b == Backend::OpenMP ? omp::diag_stats(x, n, d, resp, k) : serial::diag_stats(x, n, d, resp, k);
}

}  // namespace fpx::kernels
