#pragma once

#include <limits>

#include "laneplan/rng.hpp"
#include "laneplan/types.hpp"

namespace laneplan {

struct LongitudinalContext {
  double speed = 0;          // own speed, m/s
  double gap = 0;            // bumper distance to the preceding car, m
  double approach_rate = 0;  // own speed minus preceding car's speed, m/s
  bool has_leader = false;
};

// Desired gap g* = g0 + T*v + v*dv/(2*sqrt(a*b)), floored at g0 so a fast
// opening rate cannot drive it negative.
double desired_gap(const IdmParams& p, const LongitudinalContext& ctx);

// a-bar * [1 - (v/v0)^delta - (g*/g)^2]; without a leader the gap term drops.
double idm_accel(const IdmParams& p, const LongitudinalContext& ctx);

// Bounds on the admissible acceleration perturbation, as magnitudes per side.
// The simulator uses them to keep noise from forcing a hard brake or an
// unavoidable crash.
struct NoiseConstraint {
  double max_up = std::numeric_limits<double>::infinity();
  double max_down = std::numeric_limits<double>::infinity();
};

// Symmetric triangular noise on [-a/2, a/2], mode 0. A binding constraint
// linearly shrinks the offending half; each half keeps probability 1/2.
double sample_accel_noise(const IdmParams& p, Rng& rng,
                          const NoiseConstraint& c = {});

// IDM accelerations of the candidate car, its would-be new follower, and its
// old follower, in one lane configuration.
struct NeighborhoodAccels {
  double candidate = 0;
  double new_follower = 0;
  double old_follower = 0;
};

// Own gain plus politeness-weighted change for both followers.
double mobil_incentive(const MobilParams& p, const NeighborhoodAccels& current,
                       const NeighborhoodAccels& hypothetical);

// Safety: the new follower's post-change acceleration must not require
// braking beyond b_safe. Incentive: mobil_incentive must exceed the threshold
// (strictly).
bool mobil_decision(const DriverParams& p, const NeighborhoodAccels& current,
                    const NeighborhoodAccels& hypothetical);

}  // namespace laneplan
