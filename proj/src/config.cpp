#include "fpx/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace fpx {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where.empty() ? "<root>" : where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(join(where, key), "unknown key");
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError(field, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, "cannot read '" + node.Scalar() + "'");
  }
}

double number(const YAML::Node& node, const std::string& field) {
  const auto v = scalar<double>(node, field);
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

double range_value(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) {
    const std::string s = node.Scalar();
    if (s == "inf" || s == "infinity" || s == ".inf") return kInf;
  }
  const double v = number(node, field);
  if (!(v > 0)) throw ConfigError(field, "must be positive or inf");
  return v;
}

Rect rect(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence() || node.size() != 4) throw ConfigError(field, "expected [x0, y0, x1, y1]");
  return {number(node[0], field), number(node[1], field), number(node[2], field), number(node[3], field)};
}

PolicyFamily family(const std::string& s, const std::string& field) {
  if (s == "fame") return PolicyFamily::Fame;
  if (s == "froshe") return PolicyFamily::Froshe;
  throw ConfigError(field, "unknown policy family '" + s + "' (fame, froshe)");
}

PolicyMode mode(const std::string& s, const std::string& field) {
  if (s == "baseline") return PolicyMode::Baseline;
  if (s == "fp") return PolicyMode::Fp;
  throw ConfigError(field, "unknown policy mode '" + s + "' (baseline, fp)");
}

Clustering clustering(const std::string& s, const std::string& field) {
  if (s == "dpgmm") return Clustering::Dpgmm;
  if (s == "kmeans_hd") return Clustering::KmeansHd;
  throw ConfigError(field, "unknown clustering '" + s + "' (dpgmm, kmeans_hd)");
}

std::pair<PolicyFamily, PolicyMode> policy_pair(const std::string& s, const std::string& field) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw ConfigError(field, "expected family/mode, e.g. fame/fp");
  return {family(s.substr(0, slash), field), mode(s.substr(slash + 1), field)};
}

void parse_world(const YAML::Node& n, ScenarioConfig& cfg) {
  check_keys(n, "world",
             {"width", "height", "resolution", "tree_density", "tree_radius", "density_patches", "spawn_zone"});
  WorldSpec& w = cfg.sim.world;
  if (n["width"]) w.width = number(n["width"], "world.width");
  if (n["height"]) w.height = number(n["height"], "world.height");
  if (n["resolution"]) w.resolution = number(n["resolution"], "world.resolution");
  if (n["tree_radius"]) {
    const auto& r = n["tree_radius"];
    if (!r.IsSequence() || r.size() != 2) throw ConfigError("world.tree_radius", "expected [min, max]");
    w.tree_radius_min = number(r[0], "world.tree_radius");
    w.tree_radius_max = number(r[1], "world.tree_radius");
  }
  if (n["tree_density"]) apply_density(cfg, scalar<std::string>(n["tree_density"], "world.tree_density"));
  if (n["density_patches"]) {
    const auto& ps = n["density_patches"];
    if (!ps.IsSequence()) throw ConfigError("world.density_patches", "expected a list");
    w.density_patches.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string f = "world.density_patches[" + std::to_string(i) + "]";
      check_keys(ps[i], f, {"rect", "density"});
      if (!ps[i]["rect"] || !ps[i]["density"]) throw ConfigError(f, "needs rect and density");
      w.density_patches.push_back({rect(ps[i]["rect"], f + ".rect"), number(ps[i]["density"], f + ".density")});
    }
    if (cfg.density_label != "mixed") cfg.density_label += "+patches";
  }
  if (n["spawn_zone"]) {
    const auto& z = n["spawn_zone"];
    if (z.IsNull() || (z.IsScalar() && z.Scalar() == "none")) {
      w.spawn_zone.reset();
    } else {
      w.spawn_zone = rect(z, "world.spawn_zone");
    }
  }
}

void parse_sensor(const YAML::Node& n, SensorModel& s) {
  check_keys(n, "sensor", {"range", "fov_deg", "ray_count"});
  const double range = n["range"] ? number(n["range"], "sensor.range") : s.range;
  const double fov = n["fov_deg"] ? number(n["fov_deg"], "sensor.fov_deg") * kPi / 180.0 : s.fov;
  s = SensorModel::with_default_rays(range, fov);
  if (n["ray_count"]) s.ray_count = scalar<int>(n["ray_count"], "sensor.ray_count");
}

void parse_policy(const YAML::Node& n, SimConfig& sim) {
  check_keys(n, "policy", {"family", "mode", "priority_scale", "fame", "froshe"});
  if (n["family"]) sim.family = family(scalar<std::string>(n["family"], "policy.family"), "policy.family");
  if (n["mode"]) sim.mode = mode(scalar<std::string>(n["mode"], "policy.mode"), "policy.mode");
  if (n["priority_scale"]) {
    const auto s = scalar<std::string>(n["priority_scale"], "policy.priority_scale");
    if (s == "raw") {
      sim.priority_scale = PriorityScale::Raw;
    } else if (s == "pool_max") {
      sim.priority_scale = PriorityScale::PoolMax;
    } else {
      throw ConfigError("policy.priority_scale", "unknown value '" + s + "' (raw, pool_max)");
    }
  }
  if (const auto& f = n["fame"]) {
    check_keys(f, "policy.fame", {"kappa_a", "kappa_r", "kappa_fp", "kappa_d", "d_rep"});
    if (f["kappa_a"]) sim.fame.kappa_a = number(f["kappa_a"], "policy.fame.kappa_a");
    if (f["kappa_r"]) sim.fame.kappa_r = number(f["kappa_r"], "policy.fame.kappa_r");
    if (f["kappa_fp"]) sim.fame.kappa_fp = number(f["kappa_fp"], "policy.fame.kappa_fp");
    if (f["kappa_d"]) sim.fame.kappa_d = number(f["kappa_d"], "policy.fame.kappa_d");
    if (f["d_rep"]) sim.fame.d_rep = number(f["d_rep"], "policy.fame.d_rep");
  }
  if (const auto& f = n["froshe"]) {
    check_keys(f, "policy.froshe", {"lambda_m", "lambda_d", "lambda_fp"});
    if (f["lambda_m"]) sim.froshe.lambda_m = number(f["lambda_m"], "policy.froshe.lambda_m");
    if (f["lambda_d"]) sim.froshe.lambda_d = number(f["lambda_d"], "policy.froshe.lambda_d");
    if (f["lambda_fp"]) sim.froshe.lambda_fp = number(f["lambda_fp"], "policy.froshe.lambda_fp");
  }
}

void parse_dpgmm(const YAML::Node& n, DpgmmOptions& o) {
  check_keys(n, "dpgmm",
             {"concentration", "mean_precision", "degrees_of_freedom", "tolerance", "max_iterations",
              "variance_floor", "weight_floor", "warm_start_ratio"});
  if (n["concentration"]) o.concentration = number(n["concentration"], "dpgmm.concentration");
  if (n["mean_precision"]) o.mean_precision = number(n["mean_precision"], "dpgmm.mean_precision");
  if (n["degrees_of_freedom"]) o.degrees_of_freedom = number(n["degrees_of_freedom"], "dpgmm.degrees_of_freedom");
  if (n["tolerance"]) o.tolerance = number(n["tolerance"], "dpgmm.tolerance");
  if (n["max_iterations"]) o.max_iterations = scalar<int>(n["max_iterations"], "dpgmm.max_iterations");
  if (n["variance_floor"]) o.variance_floor = number(n["variance_floor"], "dpgmm.variance_floor");
  if (n["weight_floor"]) o.weight_floor = number(n["weight_floor"], "dpgmm.weight_floor");
  if (n["warm_start_ratio"]) o.warm_start_ratio = number(n["warm_start_ratio"], "dpgmm.warm_start_ratio");
  if (!(o.concentration > 0)) throw ConfigError("dpgmm.concentration", "must be positive");
  if (!(o.mean_precision > 0)) throw ConfigError("dpgmm.mean_precision", "must be positive");
  if (!(o.degrees_of_freedom > 0)) throw ConfigError("dpgmm.degrees_of_freedom", "must be positive");
  if (!(o.tolerance > 0)) throw ConfigError("dpgmm.tolerance", "must be positive");
  if (o.max_iterations < 1) throw ConfigError("dpgmm.max_iterations", "must be at least 1");
  if (!(o.variance_floor > 0)) throw ConfigError("dpgmm.variance_floor", "must be positive");
  if (!(o.weight_floor >= 0 && o.weight_floor < 1)) throw ConfigError("dpgmm.weight_floor", "must be in [0, 1)");
}

std::vector<std::uint64_t> parse_seeds(const YAML::Node& n) {
  std::vector<std::uint64_t> seeds;
  if (n.IsSequence()) {
    for (std::size_t i = 0; i < n.size(); ++i) seeds.push_back(scalar<std::uint64_t>(n[i], "seeds"));
  } else if (n.IsMap()) {
    check_keys(n, "seeds", {"first", "count"});
    const auto first = n["first"] ? scalar<std::uint64_t>(n["first"], "seeds.first") : 0;
    if (!n["count"]) throw ConfigError("seeds.count", "required");
    const auto count = scalar<int>(n["count"], "seeds.count");
    if (count < 1) throw ConfigError("seeds.count", "must be at least 1");
    for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  } else {
    seeds.push_back(scalar<std::uint64_t>(n, "seeds"));
  }
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  return seeds;
}

SweepSpec parse_sweep(const YAML::Node& n) {
  check_keys(n, "sweep", {"tree_density", "n_r", "comm_range", "policy", "clustering"});
  SweepSpec s;
  auto list = [&](const char* key) {
    const auto& v = n[key];
    if (v && !v.IsSequence()) throw ConfigError(std::string("sweep.") + key, "expected a list");
    return v;
  };
  if (const auto v = list("tree_density")) {
    for (const auto& x : v) s.densities.push_back(scalar<std::string>(x, "sweep.tree_density"));
  }
  if (const auto v = list("n_r")) {
    for (const auto& x : v) s.team_sizes.push_back(scalar<int>(x, "sweep.n_r"));
  }
  if (const auto v = list("comm_range")) {
    for (const auto& x : v) s.comm_ranges.push_back(range_value(x, "sweep.comm_range"));
  }
  if (const auto v = list("policy")) {
    for (const auto& x : v) s.policies.push_back(policy_pair(scalar<std::string>(x, "sweep.policy"), "sweep.policy"));
  }
  if (const auto v = list("clustering")) {
    for (const auto& x : v) {
      s.clusterings.push_back(clustering(scalar<std::string>(x, "sweep.clustering"), "sweep.clustering"));
    }
  }
  return s;
}

ConfigFile parse_root(const YAML::Node& root) {
  if (!root || root.IsNull()) throw ConfigError("<root>", "empty document");
  check_keys(root, "",
             {"name", "world", "sensor", "n_r", "comm_range", "policy", "clustering", "kmeans_k", "dpgmm", "seeds",
              "tick_budget", "coverage_threshold", "speed", "redecide_period", "robot_radius", "output", "backend",
              "sweep"});
  ConfigFile file;
  ScenarioConfig& cfg = file.base;
  cfg.sim.world.spawn_zone = Rect{1.0, 1.0, 5.0, 5.0};
  apply_density(cfg, "0.1");
  SimConfig& sim = cfg.sim;
  if (root["name"]) cfg.name = scalar<std::string>(root["name"], "name");
  if (root["world"]) parse_world(root["world"], cfg);
  if (root["sensor"]) parse_sensor(root["sensor"], sim.sensor);
  if (root["n_r"]) sim.n_r = scalar<int>(root["n_r"], "n_r");
  if (root["comm_range"]) sim.comm_range = range_value(root["comm_range"], "comm_range");
  if (root["policy"]) parse_policy(root["policy"], sim);
  if (root["clustering"]) sim.clustering = clustering(scalar<std::string>(root["clustering"], "clustering"), "clustering");
  if (root["kmeans_k"]) sim.kmeans_k = scalar<int>(root["kmeans_k"], "kmeans_k");
  if (root["dpgmm"]) parse_dpgmm(root["dpgmm"], sim.dpgmm);
  if (root["seeds"]) cfg.seeds = parse_seeds(root["seeds"]);
  if (root["tick_budget"]) sim.tick_budget = scalar<int>(root["tick_budget"], "tick_budget");
  if (root["coverage_threshold"]) sim.coverage_threshold = number(root["coverage_threshold"], "coverage_threshold");
  if (root["speed"]) sim.speed = number(root["speed"], "speed");
  if (root["redecide_period"]) sim.redecide_period = scalar<int>(root["redecide_period"], "redecide_period");
  if (root["robot_radius"]) sim.robot_radius = number(root["robot_radius"], "robot_radius");
  if (root["output"]) cfg.output = scalar<std::string>(root["output"], "output");
  if (root["backend"]) {
    const auto b = scalar<std::string>(root["backend"], "backend");
    if (b == "openmp") {
      sim.backend = kernels::Backend::OpenMP;
    } else if (b == "serial") {
      sim.backend = kernels::Backend::Serial;
    } else {
      throw ConfigError("backend", "unknown backend '" + b + "' (openmp, serial)");
    }
  }
  if (root["sweep"]) file.sweep = parse_sweep(root["sweep"]);

  // Validation with field names attached.
  auto guard = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
  };
  guard("world", [&] { sim.world.validate(); });
  guard("sensor", [&] { sim.sensor.validate(); });
  guard("policy.fame", [&] { sim.fame.validate(); });
  guard("policy.froshe", [&] { sim.froshe.validate(); });
  if (sim.n_r < 1) throw ConfigError("n_r", "must be at least 1");
  if (sim.kmeans_k < 0) throw ConfigError("kmeans_k", "must be non-negative");
  if (sim.tick_budget < 1) throw ConfigError("tick_budget", "must be at least 1");
  if (!(sim.coverage_threshold > 0 && sim.coverage_threshold <= 1)) {
    throw ConfigError("coverage_threshold", "must be in (0, 1]");
  }
  if (!(sim.speed > 0)) throw ConfigError("speed", "must be positive");
  if (sim.redecide_period < 1) throw ConfigError("redecide_period", "must be at least 1");
  if (!(sim.robot_radius > 0)) throw ConfigError("robot_radius", "must be positive");
  for (const auto& d : file.sweep.densities) {
    ScenarioConfig probe = cfg;
    try {
      apply_density(probe, d);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep.tree_density", e.what());
    }
  }
  for (int n : file.sweep.team_sizes) {
    if (n < 1) throw ConfigError("sweep.n_r", "team sizes must be at least 1");
  }
  return file;
}

}  // namespace

void apply_density(ScenarioConfig& cfg, const std::string& label) {
  WorldSpec& w = cfg.sim.world;
  if (label == "mixed") {
    w.density_patches = mixed_density_quadrants(w.width, w.height);
    w.tree_density = 0.0;
    cfg.density_label = "mixed";
    return;
  }
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(label, &used);
    if (used != label.size()) throw std::invalid_argument(label);
  } catch (const std::exception&) {
    throw ConfigError("world.tree_density", "expected a number or 'mixed', got '" + label + "'");
  }
  if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("world.tree_density", "must be a non-negative number");
  w.tree_density = v;
  w.density_patches.clear();
  cfg.density_label = label;
}

ConfigFile parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<parse>", e.what());
  }
  return parse_root(root);
}

ConfigFile parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<ScenarioConfig> expand(const ConfigFile& file) {
  const SweepSpec& s = file.sweep;
  const ScenarioConfig& base = file.base;
  auto or_base = [](auto axis, auto value) {
    if (axis.empty()) axis.push_back(value);
    return axis;
  };
  const auto densities = or_base(s.densities, base.density_label);
  const auto teams = or_base(s.team_sizes, base.sim.n_r);
  const auto ranges = or_base(s.comm_ranges, base.sim.comm_range);
  const auto policies = or_base(s.policies, std::pair{base.sim.family, base.sim.mode});
  const auto clusterings = or_base(s.clusterings, base.sim.clustering);

  std::vector<ScenarioConfig> out;
  for (const auto& d : densities) {
    for (int n : teams) {
      for (double r : ranges) {
        for (const auto& [fam, mode] : policies) {
          for (Clustering c : clusterings) {
            ScenarioConfig cfg = base;
            if (!s.densities.empty()) apply_density(cfg, d);
            cfg.sim.n_r = n;
            cfg.sim.comm_range = r;
            cfg.sim.family = fam;
            cfg.sim.mode = mode;
            cfg.sim.clustering = c;
            out.push_back(std::move(cfg));
          }
        }
      }
    }
  }
  return out;
}

std::string format_range(double meters) {
  if (std::isinf(meters)) return "inf";
  std::ostringstream os;
  os << meters;
  return os.str();
}

std::string canonical(const SimConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  const WorldSpec& w = c.world;
  os << "world " << w.width << ' ' << w.height << ' ' << w.resolution << ' ' << w.tree_density << ' '
     << w.tree_radius_min << ' ' << w.tree_radius_max << '\n';
  for (const auto& p : w.density_patches) {
    os << "patch " << p.area.x0 << ' ' << p.area.y0 << ' ' << p.area.x1 << ' ' << p.area.y1 << ' ' << p.density
       << '\n';
  }
  if (w.spawn_zone) {
    os << "spawn_zone " << w.spawn_zone->x0 << ' ' << w.spawn_zone->y0 << ' ' << w.spawn_zone->x1 << ' '
       << w.spawn_zone->y1 << '\n';
  }
  os << "sensor " << c.sensor.range << ' ' << c.sensor.fov << ' ' << c.sensor.ray_count << '\n';
  os << "team " << c.n_r << ' ' << format_range(c.comm_range) << ' ' << c.speed << ' ' << c.robot_radius << '\n';
  os << "policy " << to_string(c.family) << ' ' << to_string(c.mode) << ' ' << to_string(c.priority_scale) << '\n';
  os << "fame " << c.fame.kappa_a << ' ' << c.fame.kappa_r << ' ' << c.fame.kappa_fp << ' ' << c.fame.kappa_d << ' '
     << c.fame.d_rep << '\n';
  os << "froshe " << c.froshe.lambda_m << ' ' << c.froshe.lambda_d << ' ' << c.froshe.lambda_fp << '\n';
  os << "clustering " << to_string(c.clustering) << ' ' << c.kmeans_k << '\n';
  const DpgmmOptions& d = c.dpgmm;
  os << "dpgmm " << d.concentration << ' ' << d.mean_precision << ' ' << d.degrees_of_freedom << ' ' << d.tolerance
     << ' ' << d.max_iterations << ' ' << d.variance_floor << ' ' << d.weight_floor << ' ' << d.warm_start_ratio
     << ' ' << d.max_components << '\n';
  os << "run " << c.tick_budget << ' ' << c.coverage_threshold << ' ' << c.redecide_period << '\n';
  return os.str();
}

std::string config_hash(const SimConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace fpx
