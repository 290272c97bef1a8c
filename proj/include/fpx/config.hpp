#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpx/sim.hpp"

namespace fpx {

/// One experiment cell: a fully specified simulation plus the seeds to run it with.
struct ScenarioConfig {
  std::string name = "scenario";
  SimConfig sim;
  std::string density_label;  // "0.1", "mixed", ...
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output = "out";
};

/// Axes of a sweep. An empty axis keeps the base value.
struct SweepSpec {
  std::vector<std::string> densities;  // numbers or "mixed"
  std::vector<int> team_sizes;
  std::vector<double> comm_ranges;
  std::vector<std::pair<PolicyFamily, PolicyMode>> policies;
  std::vector<Clustering> clusterings;

  bool empty() const {
    return densities.empty() && team_sizes.empty() && comm_ranges.empty() && policies.empty() && clusterings.empty();
  }
};

struct ConfigFile {
  ScenarioConfig base;
  SweepSpec sweep;
};

/// YAML scenario file. Unknown keys are rejected; errors carry the dotted field path.
ConfigFile parse_config(const std::filesystem::path& path);
ConfigFile parse_config_text(const std::string& text);

/// Sets tree_density (and the mixed-density patches) from a label: a number, or "mixed".
void apply_density(ScenarioConfig& cfg, const std::string& label);

/// Cartesian product of the sweep axes over the base scenario, in axis order density, team size,
/// comm range, policy, clustering. A file without a sweep section expands to its base scenario.
std::vector<ScenarioConfig> expand(const ConfigFile& file);

/// Canonical text form of every simulation parameter (seeds and output excluded).
std::string canonical(const SimConfig& cfg);

/// FNV-1a 64 of canonical(cfg), as 16 hex digits.
std::string config_hash(const SimConfig& cfg);

std::string format_range(double meters);

}  // namespace fpx
