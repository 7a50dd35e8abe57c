#include "laneplan/safety.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace laneplan {

void integrate_longitudinal(double& x, double& v, double a, double dt) {
  double v_next = v + a * dt;
  if (v_next >= 0.0) {
    x += v * dt + 0.5 * a * dt * dt;
    v = v_next;
  } else {
    // Stops partway through the step; no reversal.
    x += (a < 0.0) ? v * v / (-2.0 * a) : 0.0;
    v = 0.0;
  }
}

double stopping_travel(double speed, double decel, double dt) {
  assert(decel > 0.0);
  if (speed <= 0.0) return 0.0;
  // n full steps at -decel, then a partial step covering w_n^2 / (2b).
  double n = std::floor(speed / (decel * dt));
  double w_n = speed - n * decel * dt;
  return n * speed * dt - 0.5 * decel * dt * dt * n * n +
         w_n * w_n / (2.0 * decel);
}

bool worst_case_clear(double rear_speed, double rear_first_accel,
                      double front_speed, double gap, double brake_limit,
                      double dt) {
  assert(rear_first_accel >= -brake_limit - 1e-9);
  if (gap <= 0.0) return false;  // already overlapping
  // Gap at the end of the first step.
  double rx = 0.0, rv = rear_speed;
  integrate_longitudinal(rx, rv, rear_first_accel, dt);
  double fx = 0.0, fv = front_speed;
  integrate_longitudinal(fx, fv, -brake_limit, dt);
  if (gap + fx - rx <= 0.0) return false;
  // Gap once both have stopped (both braking at brake_limit after step one).
  double front_total = stopping_travel(front_speed, brake_limit, dt);
  double rear_total = rx + stopping_travel(rv, brake_limit, dt);
  return gap + front_total - rear_total > 0.0;
}

double max_safe_accel_bound(double rear_speed, double front_speed, double gap,
                            double brake_limit, double dt) {
  constexpr double kAccelCeiling = 10.0;
  if (worst_case_clear(rear_speed, kAccelCeiling, front_speed, gap,
                       brake_limit, dt))
    return std::numeric_limits<double>::infinity();
  if (!worst_case_clear(rear_speed, -brake_limit, front_speed, gap,
                        brake_limit, dt))
    return -std::numeric_limits<double>::infinity();
  double lo = -brake_limit, hi = kAccelCeiling;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    if (worst_case_clear(rear_speed, mid, front_speed, gap, brake_limit, dt))
      lo = mid;
    else
      hi = mid;
  }
  // Shave a hair so a controller riding this bound for many steps keeps a
  // strictly positive gap under floating-point rounding; 1e-9 m/s^2 buys a
  // few nanometers of clearance per step.
  return lo - 1e-9;
}

}  // namespace laneplan
