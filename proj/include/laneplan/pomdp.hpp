#pragma once

#include "laneplan/highway.hpp"

namespace laneplan {

// Exact largest safe first-step acceleration for the ego against its min-gap
// leader; +inf without a leader. Depends only on observable physical state.
double max_safe_accel(const SceneState& s, const SimParams& p);

struct ActionSet {
  FixedVec<EgoAction, 10> items;
};

// Ego actions in a fixed construction order: accel in {-1, 0, +1} crossed
// with lateral in {keep, begin_left, begin_right}, then the dynamic brake
// appended last (never pruned). Pruned are: accelerations above the safe
// bound; lateral commands off the road or while a change is underway; lane
// changes failing the worst-case initiation gates against the destination
// leader (at this action's acceleration) and follower (at `follower_accel`,
// the simulator's conservative bound on any follower's next acceleration).
ActionSet available_actions(const SceneState& s, const SimParams& p,
                            double follower_accel);

// +1 for being on the target lane with the odometer within the distance
// limit, minus lambda per unsafe-event type (hard brake, too slow) among the
// surrounding cars. Recomputed from the state pair alone.
double reward(const SceneState& before, const SceneState& after,
              const RewardWeights& w, const SimParams& p);

// Physical states and ids are observed exactly; behavior parameters are not.
Observation observe(const SceneState& s);
bool same_observation(const Observation& a, const Observation& b);

}  // namespace laneplan
