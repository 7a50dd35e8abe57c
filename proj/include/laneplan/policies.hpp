#pragma once

#include <memory>
#include <string>

#include "laneplan/belief.hpp"
#include "laneplan/highway.hpp"
#include "laneplan/mcts.hpp"

namespace laneplan {

enum class PolicyKind {
  assume_normal,
  naive_mdp,
  mean_state_mdp,
  qmdp,
  pomcpow,
  omniscient,
};

const char* policy_name(PolicyKind kind);
// Accepts exactly the names policy_name produces; false on anything else.
bool parse_policy(const std::string& text, PolicyKind* out);

// Everything a policy needs besides the live episode: the physical
// configuration, the driver distribution it believes in (which may differ
// from the one the world actually samples), the reward trade-off and the
// search budget.
struct PolicyDeps {
  SimParams params;
  BehaviorDistribution model;
  RewardWeights weights;
  PlannerParams planner;
  int joint_particles = 5000;
  int rank_particles = 2000;
  double lane_mismatch = 0.05;
};

// An online decision maker. `decide` receives the true world state, which
// only the omniscient policy reads; everything else works from the
// observations fed through begin_episode and after_step.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(const Observation& o, Rng& rng) = 0;
  virtual EgoAction decide(const SceneState& world, Rng& rng) = 0;
  virtual void after_step(const EgoAction& a, const Observation& o,
                          Rng& rng) = 0;
  virtual const char* name() const = 0;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyDeps& deps);

}  // namespace laneplan
