#pragma once

#include <span>
#include <vector>

#include "fpx/dpgmm.hpp"
#include "fpx/viewpoint.hpp"

namespace fpx {

struct PriorityEntry {
  std::size_t viewpoint = 0;  // index into the pool
  double gain_prob = 0.0;     // P(I | xi)
  double coherence = 0.0;     // P(k_c | xi)
  double joint = 0.0;         // P(k_c, I | xi)
  double log_joint = 0.0;     // ln P(k_c, I | xi); finite even where `joint` underflows
};

/// N(x_xi | mu_kc, Sigma_kc) normalized over the pool's viewpoints (not over components).
/// Evaluated in log space, so every entry is strictly positive unless the density ratio to the
/// closest viewpoint underflows a double.
std::vector<double> cluster_coherence(const MixtureModel& model, int k_c, const ViewpointPool& pool);

/// Natural log of cluster_coherence, normalized with log-sum-exp.
std::vector<double> log_cluster_coherence(const MixtureModel& model, int k_c, const ViewpointPool& pool);

/// Joint priority per viewpoint, sorted by joint descending, ties by ascending viewpoint id.
std::vector<PriorityEntry> prioritize(std::span<const double> gain_probs, std::span<const double> coherence);

/// As prioritize, with coherence given in log space. Sorted by log_joint, so the order survives
/// underflow of the linear joint.
std::vector<PriorityEntry> prioritize_log(std::span<const double> gain_probs, std::span<const double> log_coherence);

/// Joint priorities re-indexed by viewpoint id (inverse of the sort in prioritize).
std::vector<double> joint_by_viewpoint(std::span<const PriorityEntry> entries);

}  // namespace fpx
