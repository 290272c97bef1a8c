#include "fpx/policy.hpp"

#include <algorithm>
#include <cmath>

namespace fpx {

std::string to_string(PolicyFamily f) { return f == PolicyFamily::Fame ? "fame" : "froshe"; }
std::string to_string(PolicyMode m) { return m == PolicyMode::Fp ? "fp" : "baseline"; }

void FamePolicyParams::validate() const {
  if (!(kappa_a >= 0 && kappa_r >= 0 && kappa_fp >= 0 && kappa_d >= 0)) {
    throw InputError("FAME weights must be non-negative");
  }
  if (!(d_rep > 0)) throw InputError("d_rep must be positive");
}

void FroshePolicyParams::validate() const {
  if (!(lambda_m >= 0 && lambda_d >= 0 && lambda_fp >= 0)) {
    throw InputError("FroShe coefficients must be non-negative");
  }
}

double potential(double dist, double d_rep) {
  const double u = std::max(0.0, 1.0 - dist / d_rep);
  return u * u;
}

std::optional<FameChoice> fame_select(const Pose& robot, const ViewpointPool& pool, std::span<const double> joint,
                                      std::span<const PeerInfo> peers, const std::optional<Pose>& own_target,
                                      std::span<const double> path_lengths, const FamePolicyParams& params,
                                      PolicyMode mode) {
  if (pool.empty()) return std::nullopt;
  if (!path_lengths.empty() && path_lengths.size() != pool.size()) {
    throw ConsistencyError("path lengths do not cover the viewpoint pool");
  }
  if (mode == PolicyMode::Fp && joint.size() != pool.size()) {
    throw ConsistencyError("joint priorities do not cover the viewpoint pool");
  }
  const Vec2 here = robot.position();
  auto length = [&](std::size_t i) {
    return path_lengths.empty() ? distance(here, pool.entries[i].pose.position()) : path_lengths[i];
  };

  double d_max = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double l = length(i);
    if (!std::isfinite(l)) continue;
    any = true;
    d_max = std::max(d_max, l);
  }
  if (!any) return std::nullopt;

  std::optional<FameChoice> best;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double l = length(i);
    if (!std::isfinite(l)) continue;
    const Vec2 x = pool.entries[i].pose.position();
    FameScore s;
    s.distance = d_max > 0 ? params.kappa_d * l / d_max : 0.0;
    double repulsion = 0.0;
    for (const auto& peer : peers) {
      if (peer.assigned_target) repulsion += potential(distance(x, peer.assigned_target->position()), params.d_rep);
      repulsion += potential(distance(x, peer.position.position()), params.d_rep);
    }
    s.collab = params.kappa_r * repulsion;
    if (mode == PolicyMode::Fp) {
      s.collab -= params.kappa_fp * joint[i];
    } else if (own_target) {
      s.collab -= params.kappa_a * potential(distance(x, own_target->position()), params.d_rep);
    }
    s.total = s.distance + s.collab;
    if (!best || s.total < best->score.total) best = FameChoice{i, s};
  }
  return best;
}

std::optional<FrosheChoice> froshe_select(const Pose& robot, std::span<const FrosheCandidate> candidates,
                                          const FroshePolicyParams& params, PolicyMode mode) {
  if (candidates.empty()) return std::nullopt;
  const Vec2 here = robot.position();
  double d_max = 0.0;
  double w_max = 0.0;
  for (const auto& c : candidates) {
    d_max = std::max(d_max, distance(here, c.position));
    w_max = std::max(w_max, c.weight);
  }
  const bool fp = mode == PolicyMode::Fp;
  const double lambda = fp ? params.lambda_fp : params.lambda_m;
  std::optional<FrosheChoice> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double w = fp ? candidates[i].weight : (w_max > 0 ? candidates[i].weight / w_max : 0.0);
    const double d = d_max > 0 ? distance(here, candidates[i].position) / d_max : 0.0;
    const double s = lambda * w - params.lambda_d * d;
    if (!best || s > best->score) best = FrosheChoice{i, s};
  }
  return best;
}

}  // namespace fpx
