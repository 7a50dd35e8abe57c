#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "laneplan/experiments.hpp"

namespace laneplan {

// Unknown key, malformed value, or out-of-range setting; the message always
// names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The flat dotted-key configuration surface. Simulation and planner defaults
// are the reference parameter set; sweep.episodes and sweep.iterations are
// the desk-scale experiment defaults, sized so a full study fits in CPU-hours
// rather than days (raise to 5000/1000 for headline-scale runs).
struct RunConfig {
  SimParams sim;
  PlannerParams planner;
  RewardWeights reward;

  int scenario = 3;
  double rho = -1.0;              // >= 0 replaces the scenario's correlation
  double expansion_factor = 1.0;  // reshapes the nominal distribution itself
  int joint_particles = 5000;
  int rank_particles = 2000;
  double lane_mismatch = 0.05;

  int episodes = 300;
  int sweep_iterations = 300;
  std::vector<double> lambdas{0.5, 1, 2, 4, 8};
  std::vector<double> rhos{0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> factors{0.2, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> plan_rhos{0, 1};
  std::vector<PolicyKind> planners;  // empty: each study's own default set

  PolicyKind episode_planner = PolicyKind::pomcpow;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  // Both throw ConfigError naming the key.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  // Every key with its effective value, fixed order; reparsing the echo
  // reproduces this config exactly.
  std::string echo() const;

  BehaviorDistribution base_distribution() const;
  StudyParams study() const;          // sweep-scale planner budget
  EpisodeSetup episode_setup() const; // single-episode planner budget
};

// Flat "key = value" lines, '#' comments, blank lines ignored.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace laneplan
