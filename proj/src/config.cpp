#include "laneplan/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace laneplan {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || std::isnan(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v +
                      "' is not an integer");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    // stoull accepts a leading '-' and wraps modulo 2^64; refuse it.
    if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v +
                      "' is not an unsigned integer");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split_list(v)) {
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) {
    throw ConfigError("config key '" + key + "': empty list");
  }
  return out;
}

void require(bool ok, const std::string& key, const char* what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt_g(xs[i]);
  }
  return out;
}

std::string join_planners(const std::vector<PolicyKind>& ks) {
  std::string out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i) out += ',';
    out += policy_name(ks[i]);
  }
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "sim.dt") {
    sim.dt = parse_double(key, v);
    require(sim.dt > 0, key, "must be > 0");
  } else if (key == "sim.max_vehicles") {
    sim.max_vehicles = parse_int(key, v);
    require(sim.max_vehicles >= 0 &&
                sim.max_vehicles <= static_cast<int>(kMaxVehicles),
            key, "must be between 0 and 16");
  } else if (key == "sim.lane_change_rate") {
    sim.lane_change_rate = parse_double(key, v);
    require(sim.lane_change_rate > 0, key, "must be > 0");
  } else if (key == "sim.distance_limit") {
    sim.distance_limit = parse_double(key, v);
    require(sim.distance_limit > 0, key, "must be > 0");
  } else if (key == "sim.vel_noise_std") {
    sim.vel_noise_std = parse_double(key, v);
    require(sim.vel_noise_std >= 0, key, "must be >= 0");
  } else if (key == "sim.brake_limit") {
    sim.brake_limit = parse_double(key, v);
    require(sim.brake_limit > 0, key, "must be > 0");
  } else if (key == "sim.hard_brake") {
    sim.hard_brake = parse_double(key, v);
    require(sim.hard_brake > 0, key, "must be > 0");
  } else if (key == "sim.slow_speed") {
    sim.slow_speed = parse_double(key, v);
    require(sim.slow_speed >= 0, key, "must be >= 0");
  } else if (key == "sim.lanes") {
    sim.lanes = parse_int(key, v);
    require(sim.lanes >= 1, key, "must be >= 1");
  } else if (key == "sim.vehicle_length") {
    sim.vehicle_length = parse_double(key, v);
    require(sim.vehicle_length > 0, key, "must be > 0");
  } else if (key == "sim.nominal_brake") {
    sim.nominal_brake = parse_double(key, v);
    require(sim.nominal_brake > 0, key, "must be > 0");
  } else if (key == "sim.accel_step") {
    sim.accel_step = parse_double(key, v);
    require(sim.accel_step > 0, key, "must be > 0");
  } else if (key == "sim.idm_exponent") {
    sim.idm_exponent = parse_double(key, v);
    require(sim.idm_exponent > 0, key, "must be > 0");
  } else if (key == "sim.max_steps") {
    sim.max_steps = parse_int(key, v);
    require(sim.max_steps >= 1, key, "must be >= 1");
  } else if (key == "planner.ucb_c") {
    planner.ucb_c = parse_double(key, v);
    require(planner.ucb_c >= 0, key, "must be >= 0");
  } else if (key == "planner.dpw_k") {
    planner.dpw_k = parse_double(key, v);
    require(planner.dpw_k > 0, key, "must be > 0");
  } else if (key == "planner.dpw_alpha") {
    planner.dpw_alpha = parse_double(key, v);
    require(planner.dpw_alpha >= 0 && planner.dpw_alpha < 1, key,
            "must be in [0, 1)");
  } else if (key == "planner.depth") {
    planner.depth = parse_int(key, v);
    require(planner.depth >= 1, key, "must be >= 1");
  } else if (key == "planner.iterations") {
    planner.iterations = parse_int(key, v);
    require(planner.iterations >= 1, key, "must be >= 1");
  } else if (key == "planner.gamma") {
    planner.gamma = parse_double(key, v);
    require(planner.gamma > 0 && planner.gamma <= 1, key,
            "must be in (0, 1]");
  } else if (key == "planner.rollout") {
    require(v == "seek-target" || v == "keep-lane", key,
            "must be seek-target or keep-lane");
    planner.rollout =
        v == "seek-target" ? RolloutKind::seek_target : RolloutKind::keep_lane;
  } else if (key == "reward.lambda") {
    reward.lambda = parse_double(key, v);
    require(reward.lambda >= 0, key, "must be >= 0");
  } else if (key == "behavior.scenario") {
    scenario = parse_int(key, v);
    require(scenario >= 1 && scenario <= 3, key, "must be 1, 2, or 3");
  } else if (key == "behavior.rho") {
    rho = parse_double(key, v);
    require(rho >= 0 && rho <= 1, key, "must be in [0, 1]");
  } else if (key == "behavior.expansion_factor") {
    expansion_factor = parse_double(key, v);
    require(expansion_factor > 0, key, "must be > 0");
  } else if (key == "filter.joint_particles") {
    joint_particles = parse_int(key, v);
    require(joint_particles >= 1, key, "must be >= 1");
  } else if (key == "filter.rank_particles") {
    rank_particles = parse_int(key, v);
    require(rank_particles >= 1, key, "must be >= 1");
  } else if (key == "filter.lane_mismatch") {
    lane_mismatch = parse_double(key, v);
    require(lane_mismatch >= 0 && lane_mismatch <= 1, key,
            "must be in [0, 1]");
  } else if (key == "sweep.episodes") {
    episodes = parse_int(key, v);
    require(episodes >= 1, key, "must be >= 1");
  } else if (key == "sweep.iterations") {
    sweep_iterations = parse_int(key, v);
    require(sweep_iterations >= 1, key, "must be >= 1");
  } else if (key == "sweep.lambdas") {
    lambdas = parse_double_list(key, v);
    for (double x : lambdas) require(x >= 0, key, "entries must be >= 0");
  } else if (key == "sweep.rhos") {
    rhos = parse_double_list(key, v);
    for (double x : rhos)
      require(x >= 0 && x <= 1, key, "entries must be in [0, 1]");
  } else if (key == "sweep.factors") {
    factors = parse_double_list(key, v);
    for (double x : factors) require(x > 0, key, "entries must be > 0");
  } else if (key == "sweep.plan_rhos") {
    plan_rhos = parse_double_list(key, v);
    for (double x : plan_rhos)
      require(x >= 0 && x <= 1, key, "entries must be in [0, 1]");
  } else if (key == "sweep.planners") {
    planners.clear();
    for (const std::string& name : split_list(v)) {
      PolicyKind k;
      require(parse_policy(name, &k), key, "unknown planner name");
      planners.push_back(k);
    }
  } else if (key == "run.planner") {
    PolicyKind k;
    require(parse_policy(v, &k), key, "unknown planner name");
    episode_planner = k;
  } else if (key == "run.seed") {
    seed = parse_u64(key, v);
  } else if (key == "run.out") {
    require(!v.empty(), key, "must not be empty");
    out_dir = v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (!(sim.hard_brake < sim.brake_limit)) {
    throw ConfigError("config key 'sim.hard_brake': must be below sim.brake_limit");
  }
  if (!(sim.nominal_brake <= sim.brake_limit)) {
    throw ConfigError(
        "config key 'sim.nominal_brake': must not exceed sim.brake_limit");
  }
}

std::string RunConfig::echo() const {
  std::string s;
  auto kv = [&s](const char* k, const std::string& v) {
    s += k;
    s += " = ";
    s += v;
    s += '\n';
  };
  kv("sim.dt", fmt_g(sim.dt));
  kv("sim.max_vehicles", std::to_string(sim.max_vehicles));
  kv("sim.lane_change_rate", fmt_g(sim.lane_change_rate));
  kv("sim.distance_limit", fmt_g(sim.distance_limit));
  kv("sim.vel_noise_std", fmt_g(sim.vel_noise_std));
  kv("sim.brake_limit", fmt_g(sim.brake_limit));
  kv("sim.hard_brake", fmt_g(sim.hard_brake));
  kv("sim.slow_speed", fmt_g(sim.slow_speed));
  kv("sim.lanes", std::to_string(sim.lanes));
  kv("sim.vehicle_length", fmt_g(sim.vehicle_length));
  kv("sim.nominal_brake", fmt_g(sim.nominal_brake));
  kv("sim.accel_step", fmt_g(sim.accel_step));
  kv("sim.idm_exponent", fmt_g(sim.idm_exponent));
  kv("sim.max_steps", std::to_string(sim.max_steps));
  kv("planner.ucb_c", fmt_g(planner.ucb_c));
  kv("planner.dpw_k", fmt_g(planner.dpw_k));
  kv("planner.dpw_alpha", fmt_g(planner.dpw_alpha));
  kv("planner.depth", std::to_string(planner.depth));
  kv("planner.iterations", std::to_string(planner.iterations));
  kv("planner.gamma", fmt_g(planner.gamma));
  kv("planner.rollout", planner.rollout == RolloutKind::seek_target
                            ? "seek-target"
                            : "keep-lane");
  kv("reward.lambda", fmt_g(reward.lambda));
  kv("behavior.scenario", std::to_string(scenario));
  if (rho >= 0) kv("behavior.rho", fmt_g(rho));
  kv("behavior.expansion_factor", fmt_g(expansion_factor));
  kv("filter.joint_particles", std::to_string(joint_particles));
  kv("filter.rank_particles", std::to_string(rank_particles));
  kv("filter.lane_mismatch", fmt_g(lane_mismatch));
  kv("sweep.episodes", std::to_string(episodes));
  kv("sweep.iterations", std::to_string(sweep_iterations));
  kv("sweep.lambdas", join(lambdas));
  kv("sweep.rhos", join(rhos));
  kv("sweep.factors", join(factors));
  kv("sweep.plan_rhos", join(plan_rhos));
  if (!planners.empty()) kv("sweep.planners", join_planners(planners));
  kv("run.planner", policy_name(episode_planner));
  kv("run.seed", std::to_string(seed));
  kv("run.out", out_dir);
  return s;
}

BehaviorDistribution RunConfig::base_distribution() const {
  BehaviorDistribution d = BehaviorDistribution::scenario(scenario);
  if (rho >= 0) d.copula = CopulaSpec::from_rho(rho);
  if (expansion_factor != 1.0) d = expand_domain(d, expansion_factor);
  d.idm_exponent = sim.idm_exponent;
  return d;
}

StudyParams RunConfig::study() const {
  StudyParams sp;
  sp.params = sim;
  sp.planner = planner;
  sp.planner.iterations = sweep_iterations;
  sp.weights = reward;
  sp.base = base_distribution();
  sp.lambdas = lambdas;
  sp.rhos = rhos;
  sp.factors = factors;
  sp.plan_rhos = plan_rhos;
  sp.planners = planners;
  sp.episodes = episodes;
  sp.seed = seed;
  sp.joint_particles = joint_particles;
  sp.rank_particles = rank_particles;
  sp.lane_mismatch = lane_mismatch;
  return sp;
}

EpisodeSetup RunConfig::episode_setup() const {
  EpisodeSetup es;
  es.params = sim;
  es.world = base_distribution();
  es.kind = episode_planner;
  es.deps.params = sim;
  es.deps.model = es.world;
  es.deps.weights = reward;
  es.deps.planner = planner;
  es.deps.joint_particles = joint_particles;
  es.deps.rank_particles = rank_particles;
  es.deps.lane_mismatch = lane_mismatch;
  return es;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config file '" + path + "' cannot be opened");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace laneplan
