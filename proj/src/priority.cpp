#include "fpx/priority.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fpx {

std::vector<double> log_cluster_coherence(const MixtureModel& model, int k_c, const ViewpointPool& pool) {
  if (pool.empty()) throw PrioritizationError("cannot compute coherence over an empty pool");
  if (k_c < 0 || k_c >= model.components) throw InputError("component index out of range");
  std::vector<double> out(pool.size());
  double mx = -kInf;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double xy[2] = {pool.entries[i].pose.x, pool.entries[i].pose.y};
    out[i] = model.log_density(k_c, xy);
    mx = std::max(mx, out[i]);
  }
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : out) v -= lse;
  return out;
}

std::vector<double> cluster_coherence(const MixtureModel& model, int k_c, const ViewpointPool& pool) {
  std::vector<double> out = log_cluster_coherence(model, k_c, pool);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<PriorityEntry> prioritize(std::span<const double> gain_probs, std::span<const double> coherence) {
  if (gain_probs.size() != coherence.size()) {
    throw ConsistencyError("gain probabilities cover " + std::to_string(gain_probs.size()) +
                           " viewpoints but coherence covers " + std::to_string(coherence.size()));
  }
  std::vector<PriorityEntry> out(gain_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lj = std::log(gain_probs[i]) + std::log(coherence[i]);
    out[i] = {i, gain_probs[i], coherence[i], gain_probs[i] * coherence[i], lj};
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PriorityEntry& a, const PriorityEntry& b) { return a.joint > b.joint; });
  return out;
}

std::vector<PriorityEntry> prioritize_log(std::span<const double> gain_probs,
                                         std::span<const double> log_coherence) {
  if (gain_probs.size() != log_coherence.size()) {
    throw ConsistencyError("gain probabilities cover " + std::to_string(gain_probs.size()) +
                           " viewpoints but coherence covers " + std::to_string(log_coherence.size()));
  }
  std::vector<PriorityEntry> out(gain_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lj = std::log(gain_probs[i]) + log_coherence[i];
    out[i] = {i, gain_probs[i], std::exp(log_coherence[i]), std::exp(lj), lj};
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PriorityEntry& a, const PriorityEntry& b) { return a.log_joint > b.log_joint; });
  return out;
}

std::vector<double> joint_by_viewpoint(std::span<const PriorityEntry> entries) {
  std::vector<double> out(entries.size(), 0.0);
  for (const auto& e : entries) {
    if (e.viewpoint >= out.size()) throw ConsistencyError("priority entry refers to a viewpoint outside the pool");
    out[e.viewpoint] = e.joint;
  }
  return out;
}

}  // namespace fpx
