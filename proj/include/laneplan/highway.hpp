#pragma once

#include "laneplan/behavior.hpp"
#include "laneplan/idm_mobil.hpp"
#include "laneplan/rng.hpp"
#include "laneplan/types.hpp"

namespace laneplan {

// Entities are addressed by index: 0..cars.size()-1 for surrounding cars,
// kEgoEntity for the ego vehicle. kNoEntity marks an absent neighbor.
constexpr int kEgoEntity = -1;
constexpr int kNoEntity = -2;

const PhysicalState& entity_phys(const SceneState& s, int e);

// Lanes whose area a vehicle overlaps: floor/ceil of its lane coordinate, and
// both source and destination when it sits at a center with lateral motion
// just begun.
struct LaneSpan {
  int lo = 0;
  int hi = 0;
  bool contains(int lane) const { return lane >= lo && lane <= hi; }
};
LaneSpan occupied_lanes(const PhysicalState& ph, int lanes);

struct NeighborRef {
  int entity = kNoEntity;
  double gap = 0;    // bumper-to-bumper, m
  double speed = 0;  // m/s
  bool exists() const { return entity != kNoEntity; }
};

// Nearest entity ahead of / behind `e` among those overlapping `lane`.
// `exclude` drops one entity from consideration (for hypothetical
// configurations).
NeighborRef nearest_leader(const SceneState& s, int e, int lane,
                           const SimParams& p, int exclude = kNoEntity);
NeighborRef nearest_follower(const SceneState& s, int e, int lane,
                             const SimParams& p, int exclude = kNoEntity);
// Same queries around a bare position (used for spawn placement).
NeighborRef nearest_leader_at(const SceneState& s, double x, int lane,
                              const SimParams& p);
NeighborRef nearest_follower_at(const SceneState& s, double x, int lane,
                                const SimParams& p);
// The leader with the smallest gap across all lanes `e` occupies; this is the
// one car-following reacts to.
NeighborRef min_gap_leader(const SceneState& s, int e, const SimParams& p);

// Largest first-step acceleration for `e` that keeps worst-case braking
// collision-free against its min-gap leader; +inf without a leader.
double entity_accel_bound(const SceneState& s, int e, const SimParams& p);

LongitudinalContext make_context(double speed, const NeighborRef& leader);

// Unsafe-event flags for one transition, recomputed from the state pair by
// vehicle id. A hard brake is a speed drop of more than hard_brake*dt in one
// step; too slow is a post-step speed below slow_speed.
struct StepEvents {
  bool other_hard_brake = false;
  bool other_too_slow = false;
  bool ego_hard_brake = false;
  bool ego_too_slow = false;
  int hard_brake_count = 0;  // all vehicles, ego included
};
StepEvents compute_events(const SceneState& before, const SceneState& after,
                          const SimParams& p);

// A lane change proposed this step, before merge coordination.
struct ChangeProposal {
  int entity = kNoEntity;
  int dest_lane = 0;
  bool canceled = false;
};

// For every pair of proposals converging on the same lane where the front car
// is within the rear car's desired gap, the rear proposal is canceled. The
// ego's gap checks use `ego_proxy` since its latent parameters do not exist.
void coordinate_merges(const SceneState& s, ChangeProposal* proposals,
                       int count, const SimParams& p,
                       const DriverParams& ego_proxy);

enum class EpisodeStatus { ongoing, success, distance_exceeded };
EpisodeStatus episode_status(const SceneState& s, const SimParams& p);

// Crash-free multi-lane traffic around a policy-driven ego vehicle.
// Surrounding cars follow IDM with constrained triangular acceleration noise
// and MOBIL lane changes; every acceleration is capped so that full braking
// always suffices to avoid the current leader, which makes collisions
// impossible by construction rather than by penalty.
class HighwaySim {
 public:
  HighwaySim(const SimParams& p, const BehaviorDistribution& dist);

  // When set, spawned cars get the distribution's normal parameters instead
  // of a sample (used by the certainty-equivalent planner variants).
  void set_spawn_normal(bool v) { spawn_normal_ = v; }

  // One synchronous step: all longitudinal decisions from the pre-step state,
  // lane-change proposals, merge coordination, integration, despawn outside
  // the +/-50 m window, then at most one spawn attempt.
  SceneState step(const SceneState& s, const EgoAction& a, Rng& rng,
                  StepEvents* ev = nullptr) const;

  // Warm-started scene: ego alone on the rightmost lane at the normal desired
  // speed, then 200 steps of lane-keeping IDM while traffic fills in; the
  // odometer and positions are rebased to zero afterwards.
  SceneState initial_scene(Rng& rng) const;

  const SimParams& params() const { return p_; }
  const BehaviorDistribution& behavior() const { return dist_; }
  const DriverParams& normal_driver_params() const { return normal_; }
  // Conservative bound on any follower's next-step acceleration (IDM base
  // plus noise cannot exceed 1.5x the largest max_accel in the distribution);
  // used for observation-determined lane-change gates.
  double follower_accel_bound() const { return follower_accel_bound_; }

 private:
  bool try_spawn(SceneState& s, Rng& rng) const;

  SimParams p_;
  BehaviorDistribution dist_;
  DriverParams normal_;
  double follower_accel_bound_;
  bool spawn_normal_ = false;
};

}  // namespace laneplan
