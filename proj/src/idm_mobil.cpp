#include "laneplan/idm_mobil.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace laneplan {

namespace {

// delta is 4 in every configuration we run; skip pow() on that path.
inline double speed_term(double v, double v0, double delta) {
  const double r = v / v0;
  if (delta == 4.0) {
    const double r2 = r * r;
    return r2 * r2;
  }
  return std::pow(r, delta);
}

}  // namespace

double desired_gap(const IdmParams& p, const LongitudinalContext& ctx) {
  const double dynamic = p.time_gap * ctx.speed +
                         ctx.speed * ctx.approach_rate /
                             (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
  return p.jam_distance + std::max(0.0, dynamic);
}

double idm_accel(const IdmParams& p, const LongitudinalContext& ctx) {
  double deficit = 1.0 - speed_term(ctx.speed, p.desired_speed, p.accel_exponent);
  if (ctx.has_leader) {
    assert(ctx.gap > 0);
    const double ratio = desired_gap(p, ctx) / ctx.gap;
    deficit -= ratio * ratio;
  }
  return p.max_accel * deficit;
}

double sample_accel_noise(const IdmParams& p, Rng& rng,
                          const NoiseConstraint& c) {
  const double half = 0.5 * p.max_accel;
  const double up = std::clamp(c.max_up, 0.0, half);
  const double down = std::clamp(c.max_down, 0.0, half);
  // Side first, then magnitude; always two draws so streams stay aligned
  // whether or not a constraint binds.
  const bool positive = draw_unit(rng) < 0.5;
  const double width = positive ? up : down;
  const double mag = width * (1.0 - std::sqrt(draw_unit(rng)));
  return positive ? mag : -mag;
}

double mobil_incentive(const MobilParams& p, const NeighborhoodAccels& current,
                       const NeighborhoodAccels& hypothetical) {
  return (hypothetical.candidate - current.candidate) +
         p.politeness * ((hypothetical.new_follower - current.new_follower) +
                         (hypothetical.old_follower - current.old_follower));
}

bool mobil_decision(const DriverParams& p, const NeighborhoodAccels& current,
                    const NeighborhoodAccels& hypothetical) {
  if (hypothetical.new_follower < -p.mobil.safe_braking) return false;
  return mobil_incentive(p.mobil, current, hypothetical) >
         p.mobil.accel_threshold;
}

}  // namespace laneplan
