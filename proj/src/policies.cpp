#include "laneplan/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "laneplan/idm_mobil.hpp"
#include "laneplan/pomcpow.hpp"
#include "laneplan/pomdp.hpp"

namespace laneplan {
namespace {

SceneState scene_with(const Observation& o, const DriverParams& fill) {
  SceneState s;
  s.ego = o.ego;
  s.odometer = o.odometer;
  std::uint32_t hi = 0;
  for (const VehicleObs& c : o.cars) {
    Vehicle v;
    v.phys = c.phys;
    v.behavior = fill;
    v.id = c.id;
    s.cars.push_back(v);
    hi = std::max(hi, c.id);
  }
  s.next_id = hi + 1;
  return s;
}

// Rollout driver: IDM at the normal parameters for speed; seek_target steers
// toward the target lane whenever the pruned set offers that direction,
// keep_lane never steers. The acceleration is clamped into the envelope of
// legal accelerations for the chosen lateral command. Off-grid values inside
// that envelope are still safe: clearance against the leader only improves
// as acceleration drops and against the new follower as it rises, so the
// interval between two legal grid points contains no unsafe point.
EgoAction rollout_drive(const SceneState& s, const SimParams& p,
                        const DriverParams& normal, double follower_accel,
                        RolloutKind kind) {
  const ActionSet set = available_actions(s, p, follower_accel);
  LatCommand lat = LatCommand::keep;
  if (kind == RolloutKind::seek_target &&
      std::lround(s.ego.y) < p.target_lane()) {
    for (const EgoAction& a : set.items) {
      if (a.lat == LatCommand::begin_left) {
        lat = LatCommand::begin_left;
        break;
      }
    }
  }
  double lo = 1e300, hi = -1e300;
  for (const EgoAction& a : set.items) {
    if (a.lat != lat) continue;
    lo = std::min(lo, a.accel);
    hi = std::max(hi, a.accel);
  }
  const NeighborRef lead = min_gap_leader(s, kEgoEntity, p);
  const double a = idm_accel(normal.idm, make_context(s.ego.vx, lead));
  return {std::clamp(a, lo, hi), lat};
}

// Generative scene model with the driver parameters carried in the state.
// With `redraw` set, every surrounding car's parameters are resampled from
// the prior before each step, so nothing learned about a driver survives even
// one transition.
struct SceneMdp {
  using State = SceneState;
  using Action = EgoAction;

  const HighwaySim* sim;
  RewardWeights w;
  bool redraw = false;
  RolloutKind rollout = RolloutKind::seek_target;

  std::vector<EgoAction> actions(const SceneState& s) const {
    const ActionSet set = available_actions(s, sim->params(), sim->follower_accel_bound());
    return std::vector<EgoAction>(set.items.begin(), set.items.end());
  }
  bool terminal(const SceneState& s) const {
    return episode_status(s, sim->params()) != EpisodeStatus::ongoing;
  }
  struct Out {
    SceneState next;
    double reward;
  };
  Out step(const SceneState& s, const EgoAction& a, Rng& rng) const {
    SceneState cur = s;
    if (redraw) {
      for (Vehicle& v : cur.cars) v.behavior = sample_driver(sim->behavior(), rng);
    }
    SceneState next = sim->step(cur, a, rng);
    return {next, reward(cur, next, w, sim->params())};
  }
  EgoAction rollout_action(const SceneState& s) const {
    return rollout_drive(s, sim->params(), sim->normal_driver_params(),
                         sim->follower_accel_bound(), rollout);
  }
};

// The same model seen through observations, for the search that branches on
// what the ego would actually see.
struct ScenePomdp {
  using State = SceneState;
  using Action = EgoAction;
  using Obs = Observation;

  const HighwaySim* sim;
  RewardWeights w;
  double lane_mismatch = 0.05;
  RolloutKind rollout = RolloutKind::seek_target;

  std::vector<EgoAction> actions(const SceneState& s) const {
    const ActionSet set = available_actions(s, sim->params(), sim->follower_accel_bound());
    return std::vector<EgoAction>(set.items.begin(), set.items.end());
  }
  bool terminal(const SceneState& s) const {
    return episode_status(s, sim->params()) != EpisodeStatus::ongoing;
  }
  struct Out {
    SceneState next;
    Observation obs;
    double reward;
  };
  Out step(const SceneState& s, const EgoAction& a, Rng& rng) const {
    SceneState next = sim->step(s, a, rng);
    return {next, observe(next), laneplan::reward(s, next, w, sim->params())};
  }
  double reward(const SceneState& prev, const EgoAction&,
                const SceneState& next) const {
    return laneplan::reward(prev, next, w, sim->params());
  }
  // Likelihood of observing `o` when the underlying state is `next`: the
  // filter's per-vehicle triangular speed weight times the lane factor.
  // Differing vehicle id sets have zero likelihood.
  double obs_weight(const Observation& o, const SceneState& next) const {
    if (o.cars.size() != next.cars.size()) return 0.0;
    double z = 1.0;
    for (const VehicleObs& c : o.cars) {
      const Vehicle* match = nullptr;
      for (const Vehicle& v : next.cars) {
        if (v.id == c.id) {
          match = &v;
          break;
        }
      }
      if (!match) return 0.0;
      const double abar = match->behavior.idm.max_accel;
      z *= std::max(0.0, (abar - 2.0 * std::abs(c.phys.vx - match->phys.vx)) / abar);
      if (std::lround(c.phys.y) != std::lround(match->phys.y)) z *= lane_mismatch;
    }
    return z;
  }
  bool same_obs(const Observation& a, const Observation& b) const {
    return same_observation(a, b);
  }
  EgoAction rollout_action(const SceneState& s) const {
    return rollout_drive(s, sim->params(), sim->normal_driver_params(),
                         sim->follower_accel_bound(), rollout);
  }
};

FilterConfig filter_config_for(PolicyKind kind, const PolicyDeps& d) {
  FilterConfig cfg;
  cfg.lane_mismatch = d.lane_mismatch;
  const bool scalar =
      kind == PolicyKind::mean_state_mdp ||
      d.model.copula.mode == CorrelationMode::fully_correlated;
  if (scalar) {
    cfg.variant = FilterVariant::aggressiveness;
    cfg.particles = d.rank_particles;
  } else {
    cfg.variant = FilterVariant::joint;
    cfg.particles = d.joint_particles;
  }
  return cfg;
}

class PolicyBase : public Policy {
 public:
  PolicyBase(PolicyKind kind, const PolicyDeps& d)
      : kind_(kind), d_(d), plan_sim_(d.params, d.model) {}

  const char* name() const override { return policy_name(kind_); }

 protected:
  EgoAction plan_on(const SceneState& s, Rng& rng) const {
    SceneMdp m{&plan_sim_, d_.weights, kind_ == PolicyKind::naive_mdp,
               d_.planner.rollout};
    MctsDpw<SceneMdp> search(m, d_.planner);
    return search.plan(s, rng);
  }

  PolicyKind kind_;
  PolicyDeps d_;
  HighwaySim plan_sim_;
};

// Plans on a fully observed stand-in scene built from the last observation
// with every driver set to the normal parameters; new traffic in the search
// is spawned normal as well.
class AssumeNormalPolicy : public PolicyBase {
 public:
  AssumeNormalPolicy(const PolicyDeps& d)
      : PolicyBase(PolicyKind::assume_normal, d) {
    plan_sim_.set_spawn_normal(true);
  }
  void begin_episode(const Observation& o, Rng&) override { obs_ = o; }
  EgoAction decide(const SceneState&, Rng& rng) override {
    return plan_on(scene_with(obs_, plan_sim_.normal_driver_params()), rng);
  }
  void after_step(const EgoAction&, const Observation& o, Rng&) override {
    obs_ = o;
  }

 private:
  Observation obs_;
};

// Treats parameter uncertainty as per-step process noise: the model redraws
// every driver from the prior at each simulated transition.
class NaivePolicy : public PolicyBase {
 public:
  NaivePolicy(const PolicyDeps& d) : PolicyBase(PolicyKind::naive_mdp, d) {}
  void begin_episode(const Observation& o, Rng&) override { obs_ = o; }
  EgoAction decide(const SceneState&, Rng& rng) override {
    return plan_on(scene_with(obs_, plan_sim_.normal_driver_params()), rng);
  }
  void after_step(const EgoAction&, const Observation& o, Rng&) override {
    obs_ = o;
  }

 private:
  Observation obs_;
};

// Certainty equivalence over the filtered posterior mean.
class MeanStatePolicy : public PolicyBase {
 public:
  MeanStatePolicy(const PolicyDeps& d)
      : PolicyBase(PolicyKind::mean_state_mdp, d),
        filter_(d.model, d.params, filter_config_for(kind_, d)) {}
  void begin_episode(const Observation& o, Rng& rng) override {
    filter_.reset(o, rng);
  }
  EgoAction decide(const SceneState&, Rng& rng) override {
    return plan_on(filter_.mean_scene(), rng);
  }
  void after_step(const EgoAction& a, const Observation& o,
                  Rng& rng) override {
    filter_.update(a, o, rng);
  }

 private:
  InternalStateFilter filter_;
};

// One posterior draw per search iteration into a shared tree: the value of a
// state under the assumption that uncertainty resolves after the first step.
class QmdpPolicy : public PolicyBase {
 public:
  QmdpPolicy(const PolicyDeps& d)
      : PolicyBase(PolicyKind::qmdp, d),
        filter_(d.model, d.params, filter_config_for(kind_, d)) {}
  void begin_episode(const Observation& o, Rng& rng) override {
    filter_.reset(o, rng);
  }
  EgoAction decide(const SceneState&, Rng& rng) override {
    SceneMdp m{&plan_sim_, d_.weights, false, d_.planner.rollout};
    MctsDpw<SceneMdp> search(m, d_.planner);
    SceneState draw;
    return search.plan_sampled(
        [this, &draw](Rng& r) -> const SceneState& {
          draw = filter_.sample_scene(r);
          return draw;
        },
        rng);
  }
  void after_step(const EgoAction& a, const Observation& o,
                  Rng& rng) override {
    filter_.update(a, o, rng);
  }

 private:
  InternalStateFilter filter_;
};

class PomcpowPolicy : public PolicyBase {
 public:
  PomcpowPolicy(const PolicyDeps& d)
      : PolicyBase(PolicyKind::pomcpow, d),
        filter_(d.model, d.params, filter_config_for(kind_, d)) {}
  void begin_episode(const Observation& o, Rng& rng) override {
    filter_.reset(o, rng);
  }
  EgoAction decide(const SceneState&, Rng& rng) override {
    ScenePomdp m{&plan_sim_, d_.weights, d_.lane_mismatch, d_.planner.rollout};
    Pomcpow<ScenePomdp> search(m, d_.planner);
    SceneState draw;
    return search.plan(
        [this, &draw](Rng& r) -> const SceneState& {
          draw = filter_.sample_scene(r);
          return draw;
        },
        rng);
  }
  void after_step(const EgoAction& a, const Observation& o,
                  Rng& rng) override {
    filter_.update(a, o, rng);
  }

 private:
  InternalStateFilter filter_;
};

// Upper reference: plans on the true scene, latent parameters included.
class OmniscientPolicy : public PolicyBase {
 public:
  OmniscientPolicy(const PolicyDeps& d)
      : PolicyBase(PolicyKind::omniscient, d) {}
  void begin_episode(const Observation&, Rng&) override {}
  EgoAction decide(const SceneState& world, Rng& rng) override {
    return plan_on(world, rng);
  }
  void after_step(const EgoAction&, const Observation&, Rng&) override {}
};

}  // namespace

const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::assume_normal: return "assume-normal";
    case PolicyKind::naive_mdp: return "naive-mdp";
    case PolicyKind::mean_state_mdp: return "mean-state-mdp";
    case PolicyKind::qmdp: return "qmdp";
    case PolicyKind::pomcpow: return "pomcpow";
    case PolicyKind::omniscient: return "omniscient";
  }
  throw std::invalid_argument("unknown policy kind");
}

bool parse_policy(const std::string& text, PolicyKind* out) {
  static constexpr PolicyKind kAll[] = {
      PolicyKind::assume_normal, PolicyKind::naive_mdp,
      PolicyKind::mean_state_mdp, PolicyKind::qmdp,
      PolicyKind::pomcpow, PolicyKind::omniscient,
  };
  for (PolicyKind k : kAll) {
    if (text == policy_name(k)) {
      *out = k;
      return true;
    }
  }
  return false;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyDeps& deps) {
  switch (kind) {
    case PolicyKind::assume_normal:
      return std::make_unique<AssumeNormalPolicy>(deps);
    case PolicyKind::naive_mdp:
      return std::make_unique<NaivePolicy>(deps);
    case PolicyKind::mean_state_mdp:
      return std::make_unique<MeanStatePolicy>(deps);
    case PolicyKind::qmdp:
      return std::make_unique<QmdpPolicy>(deps);
    case PolicyKind::pomcpow:
      return std::make_unique<PomcpowPolicy>(deps);
    case PolicyKind::omniscient:
      return std::make_unique<OmniscientPolicy>(deps);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace laneplan
