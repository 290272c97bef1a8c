#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpx/common.hpp"
#include "fpx/viewpoint.hpp"

namespace fpx {

enum class PolicyFamily { Fame, Froshe };
enum class PolicyMode { Baseline, Fp };

std::string to_string(PolicyFamily f);
std::string to_string(PolicyMode m);

struct FamePolicyParams {
  double kappa_a = 1.0;
  double kappa_r = 0.5;
  double kappa_fp = 1.0;
  double d_rep = 10.0;  // meters
  double kappa_d = 1.0;

  void validate() const;
};

struct FroshePolicyParams {
  double lambda_m = 0.6;
  double lambda_d = 0.4;
  double lambda_fp = 0.6;

  void validate() const;
};

struct PeerInfo {
  RobotId id = 0;
  Pose position;
  std::optional<Pose> assigned_target;
};

/// max(0, 1 - dist / d_rep)^2.
double potential(double dist, double d_rep);

struct FameScore {
  double distance = 0.0;    // kappa_d * path / d_max
  double collab = 0.0;      // J_C
  double total = 0.0;
};

struct FameChoice {
  std::size_t viewpoint = 0;
  FameScore score;
};

/// Minimizes kappa_d * path/d_max + J_C over reachable viewpoints.
///   baseline: J_C = -kappa_a U(xi, own_target) + kappa_r sum_peers [U(xi, peer target) + U(xi, peer)]
///   fp:       J_C = -kappa_fp P(k_c,I|xi) + the same repulsion sum
/// `path_lengths[i]` is the robot's path length to viewpoint i (kInf: unreachable); when empty,
/// Euclidean distance is used. `joint` is indexed by viewpoint id and only read in fp mode.
/// Returns nullopt when no viewpoint is reachable.
std::optional<FameChoice> fame_select(const Pose& robot, const ViewpointPool& pool, std::span<const double> joint,
                                      std::span<const PeerInfo> peers, const std::optional<Pose>& own_target,
                                      std::span<const double> path_lengths, const FamePolicyParams& params,
                                      PolicyMode mode);

struct FrosheCandidate {
  Vec2 position;
  double weight = 0.0;  // member count (baseline) or joint priority (fp)
};

struct FrosheChoice {
  std::size_t candidate = 0;
  double score = 0.0;
};

/// baseline: argmax lambda_m * w / w_max - lambda_d * |robot - x| / d_max
/// fp:       argmax lambda_fp * w - lambda_d * |robot - x| / d_max, w the joint priority
/// Returns nullopt for an empty candidate list.
std::optional<FrosheChoice> froshe_select(const Pose& robot, std::span<const FrosheCandidate> candidates,
                                          const FroshePolicyParams& params, PolicyMode mode);

}  // namespace fpx
