#include "laneplan/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "laneplan/safety.hpp"

namespace laneplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double max_safe_accel(const SceneState& s, const SimParams& p) {
  return entity_accel_bound(s, kEgoEntity, p);
}

ActionSet available_actions(const SceneState& s, const SimParams& p,
                            double follower_accel) {
  ActionSet out;
  const NeighborRef lead = min_gap_leader(s, kEgoEntity, p);
  // The exact bound is only needed when the cheap probes fail.
  double bound = kInf;
  double brake = -p.nominal_brake;
  if (lead.exists() &&
      !worst_case_clear(s.ego.vx, p.accel_step, lead.speed, lead.gap,
                        p.brake_limit, p.dt)) {
    bound = max_safe_accel_bound(s.ego.vx, lead.speed, lead.gap, p.brake_limit,
                                 p.dt);
    brake = std::max(-p.brake_limit, std::min(bound, -p.nominal_brake));
  }

  const bool changing = s.ego.vy != 0.0;
  const int lane = static_cast<int>(std::lround(
      changing ? (s.ego.vy > 0.0 ? std::floor(s.ego.y) : std::ceil(s.ego.y))
               : s.ego.y));
  // Lane-change gates are shared by every acceleration in a direction except
  // the leader check, which uses the action's own first-step acceleration.
  struct Side {
    bool open = false;
    NeighborRef lead;
  };
  Side side[2];  // 0 = left, 1 = right
  if (!changing) {
    for (int k = 0; k < 2; ++k) {
      const int dest = lane + (k == 0 ? 1 : -1);
      if (dest < 0 || dest >= p.lanes) continue;
      const NeighborRef follow = nearest_follower(s, kEgoEntity, dest, p);
      if (follow.exists() &&
          !worst_case_clear(follow.speed, follower_accel, s.ego.vx, follow.gap,
                            p.brake_limit, p.dt)) {
        continue;
      }
      side[k].open = true;
      side[k].lead = nearest_leader(s, kEgoEntity, dest, p);
    }
  }

  for (const double acc : {-p.accel_step, 0.0, p.accel_step}) {
    if (acc > bound) continue;
    for (const LatCommand lat :
         {LatCommand::keep, LatCommand::begin_left, LatCommand::begin_right}) {
      if (lat == LatCommand::keep) {
        out.items.push_back({acc, lat});
        continue;
      }
      const Side& sd = side[lat == LatCommand::begin_left ? 0 : 1];
      if (!sd.open) continue;
      if (sd.lead.exists() &&
          !worst_case_clear(s.ego.vx, acc, sd.lead.speed, sd.lead.gap,
                            p.brake_limit, p.dt)) {
        continue;
      }
      out.items.push_back({acc, lat});
    }
  }
  out.items.push_back({brake, LatCommand::keep});
  return out;
}

double reward(const SceneState& before, const SceneState& after,
              const RewardWeights& w, const SimParams& p) {
  const StepEvents ev = compute_events(before, after, p);
  double r = episode_status(after, p) == EpisodeStatus::success ? 1.0 : 0.0;
  r -= w.lambda * ((ev.other_hard_brake ? 1.0 : 0.0) +
                   (ev.other_too_slow ? 1.0 : 0.0));
  return r;
}

Observation observe(const SceneState& s) {
  Observation o;
  o.ego = s.ego;
  o.odometer = s.odometer;
  for (const Vehicle& c : s.cars) {
    o.cars.push_back({c.id, c.phys});
  }
  return o;
}

bool same_observation(const Observation& a, const Observation& b) {
  const auto same_phys = [](const PhysicalState& u, const PhysicalState& v) {
    return u.x == v.x && u.y == v.y && u.vx == v.vx && u.vy == v.vy;
  };
  if (!same_phys(a.ego, b.ego) || a.odometer != b.odometer ||
      a.cars.size() != b.cars.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.cars.size(); ++i) {
    if (a.cars[i].id != b.cars[i].id ||
        !same_phys(a.cars[i].phys, b.cars[i].phys)) {
      return false;
    }
  }
  return true;
}

}  // namespace laneplan
