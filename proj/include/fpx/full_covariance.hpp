#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fpx {

/// Full-covariance counterpart of fit_dpgmm (Normal-Wishart components, same stick-breaking
/// weights). Kept as the O(T N K d^2) reference the diagonal fit is timed against; it runs a fixed
/// number of iterations and has no convergence test.
struct FullCovarianceFit {
  int dim = 0;
  int components = 0;
  std::vector<double> weights;  // K
  std::vector<double> means;    // K x dim
  std::vector<double> covariances;  // K x dim x dim, expected covariance (W nu)^-1
  int iterations = 0;
};

FullCovarianceFit fit_full_covariance(std::span<const double> data, int dim, int components, int iterations,
                                      std::uint64_t seed);

}  // namespace fpx
