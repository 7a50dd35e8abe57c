#pragma once

namespace laneplan {

// Discrete-time worst-case stopping kinematics, shared by the simulator
// (noise constraints, lane-change gates, spawn checks) and the ego action
// pruning. All gaps are bumper-to-bumper.

// Total distance covered by a vehicle at `speed` braking at `decel` under the
// simulator's integration rule (constant acceleration per step of length dt,
// stop handled mid-step).
double stopping_travel(double speed, double decel, double dt);

// True iff the rear vehicle, applying rear_first_accel for one step and then
// braking at brake_limit, keeps a positive gap to a front vehicle that brakes
// at brake_limit to a stop starting immediately. Requires
// rear_first_accel >= -brake_limit; under that condition the minimum gap is
// attained either at the end of the first step or when both have stopped.
bool worst_case_clear(double rear_speed, double rear_first_accel,
                      double front_speed, double gap, double brake_limit,
                      double dt);

// Largest first-step acceleration that keeps worst_case_clear true; +inf when
// even a large acceleration is safe, -inf when full braking already fails.
double max_safe_accel_bound(double rear_speed, double front_speed, double gap,
                            double brake_limit, double dt);

// One Euler step with the stop clamp: advances x and v under acceleration a.
void integrate_longitudinal(double& x, double& v, double a, double dt);

}  // namespace laneplan
