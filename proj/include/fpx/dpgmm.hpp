#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/kernels.hpp"

namespace fpx {

/// Priors and stopping rules for the truncated Dirichlet-process mixture.
struct DpgmmOptions {
  double concentration = 1.0;     // gamma of the Beta(1, gamma) sticks
  double mean_precision = 1.0;    // beta_0, scales the mean prior by the component precision
  double degrees_of_freedom = 2.0;  // nu_0 of the per-axis variance prior; Gamma(nu_0/2, nu_0*var/2)
  double tolerance = 1e-6;        // relative ELBO change
  int max_iterations = 100;
  double variance_floor = 1e-4;   // m^2 per axis
  double weight_floor = 1e-3;     // below this weight or data share a component is inactive
  double warm_start_ratio = 0.5;  // warm start only when |N - N_prev| / N_prev is below this
  int max_components = 0;         // 0: truncation at max(1, floor(N / 2))
  kernels::Backend backend = kernels::Backend::OpenMP;
};

/// Fitted mixture. Point estimates are posterior expectations: weights E[pi_k], means E[mu_k],
/// variances 1 / E[lambda_k] floored at the variance floor.
struct MixtureModel {
  int dim = 2;
  int components = 0;
  std::vector<double> weights;    // K
  std::vector<double> means;      // K x dim
  std::vector<double> variances;  // K x dim
  std::vector<bool> active;       // K
  bool converged = false;
  int iterations = 0;
  std::size_t n_points = 0;
  bool warm_started = false;
  std::vector<double> elbo_trace;

  std::span<const double> mean(int k) const {
    return {means.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<const double> variance(int k) const {
    return {variances.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
  }
  Vec2 mean2(int k) const { return {means[2 * k], means[2 * k + 1]}; }
  int active_count() const;

  /// log N(x | mu_k, diag(sigma_k)).
  double log_density(int k, std::span<const double> x) const;
};

struct Responsibilities {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows x cols

  std::span<const double> row(int n) const {
    return {values.data() + static_cast<std::size_t>(n) * cols, static_cast<std::size_t>(cols)};
  }
};

struct DpgmmFit {
  MixtureModel model;
  Responsibilities responsibilities;
};

/// Mean-field variational inference for a stick-breaking Dirichlet-process mixture of
/// diagonal-covariance Gaussians (Normal-Gamma prior per axis). `data` is row-major n x dim.
DpgmmFit fit_dpgmm(std::span<const double> data, int dim, const MixtureModel* warm_start, std::uint64_t seed,
                   const DpgmmOptions& options = {});

DpgmmFit fit_dpgmm(std::span<const Vec2> points, const MixtureModel* warm_start, std::uint64_t seed,
                   const DpgmmOptions& options = {});

/// P(k | x) = alpha_k N(x | mu_k, Sigma_k) / sum_j alpha_j N(x | mu_j, Sigma_j), in log space.
std::vector<double> responsibility(const MixtureModel& model, Vec2 x);

/// argmax_k alpha_k N(pose | mu_k, Sigma_k) over active components; lowest index wins ties.
int allocate_component(const MixtureModel& model, const Pose& robot);

/// Text record: "fpx-mixture 1", then "K dim", then one "alpha active mu... sigma..." line per
/// component.
void write_model(std::ostream& out, const MixtureModel& model);
MixtureModel read_model(std::istream& in);

}  // namespace fpx
