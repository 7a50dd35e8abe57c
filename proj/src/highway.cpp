#include "laneplan/highway.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "laneplan/safety.hpp"

namespace laneplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Lane coordinates hit integers only by explicit snap assignment, so exact
// comparisons below are sound; the epsilon only guards floor/ceil.
constexpr double kLaneEps = 1e-9;

bool at_center(const PhysicalState& ph) {
  return ph.vy == 0.0 && ph.y == std::floor(ph.y);
}

}  // namespace

const PhysicalState& entity_phys(const SceneState& s, int e) {
  return e == kEgoEntity ? s.ego : s.cars[e].phys;
}

LaneSpan occupied_lanes(const PhysicalState& ph, int lanes) {
  int lo = static_cast<int>(std::floor(ph.y + kLaneEps));
  int hi = static_cast<int>(std::ceil(ph.y - kLaneEps));
  if (lo == hi && ph.vy != 0.0) {
    // Change just initiated from a center: source and destination both count.
    if (ph.vy > 0.0) {
      hi = lo + 1;
    } else {
      lo = hi - 1;
    }
  }
  lo = std::clamp(lo, 0, lanes - 1);
  hi = std::clamp(hi, 0, lanes - 1);
  return {lo, hi};
}

namespace {

// Iterates entities as kEgoEntity, 0, 1, ... for deterministic scans.
template <typename Fn>
void for_each_entity(const SceneState& s, Fn&& fn) {
  fn(kEgoEntity);
  for (int i = 0; i < static_cast<int>(s.cars.size()); ++i) fn(i);
}

}  // namespace

NeighborRef nearest_leader(const SceneState& s, int e, int lane,
                           const SimParams& p, int exclude) {
  const PhysicalState& self = entity_phys(s, e);
  NeighborRef best;
  double best_dx = kInf;
  for_each_entity(s, [&](int i) {
    if (i == e || i == exclude) return;
    const PhysicalState& ph = entity_phys(s, i);
    if (!occupied_lanes(ph, p.lanes).contains(lane)) return;
    const double dx = ph.x - self.x;
    const bool ahead = dx > 0.0 || (dx == 0.0 && i < e);
    if (!ahead || dx >= best_dx) return;
    best_dx = dx;
    best = {i, dx - p.vehicle_length, ph.vx};
  });
  return best;
}

NeighborRef nearest_follower(const SceneState& s, int e, int lane,
                             const SimParams& p, int exclude) {
  const PhysicalState& self = entity_phys(s, e);
  NeighborRef best;
  double best_dx = kInf;
  for_each_entity(s, [&](int i) {
    if (i == e || i == exclude) return;
    const PhysicalState& ph = entity_phys(s, i);
    if (!occupied_lanes(ph, p.lanes).contains(lane)) return;
    const double dx = self.x - ph.x;
    const bool behind = dx > 0.0 || (dx == 0.0 && i > e);
    if (!behind || dx >= best_dx) return;
    best_dx = dx;
    best = {i, dx - p.vehicle_length, ph.vx};
  });
  return best;
}

NeighborRef nearest_leader_at(const SceneState& s, double x, int lane,
                              const SimParams& p) {
  NeighborRef best;
  double best_dx = kInf;
  for_each_entity(s, [&](int i) {
    const PhysicalState& ph = entity_phys(s, i);
    if (!occupied_lanes(ph, p.lanes).contains(lane)) return;
    const double dx = ph.x - x;
    if (dx <= 0.0 || dx >= best_dx) return;
    best_dx = dx;
    best = {i, dx - p.vehicle_length, ph.vx};
  });
  return best;
}

NeighborRef nearest_follower_at(const SceneState& s, double x, int lane,
                                const SimParams& p) {
  NeighborRef best;
  double best_dx = kInf;
  for_each_entity(s, [&](int i) {
    const PhysicalState& ph = entity_phys(s, i);
    if (!occupied_lanes(ph, p.lanes).contains(lane)) return;
    const double dx = x - ph.x;
    if (dx <= 0.0 || dx >= best_dx) return;
    best_dx = dx;
    best = {i, dx - p.vehicle_length, ph.vx};
  });
  return best;
}

NeighborRef min_gap_leader(const SceneState& s, int e, const SimParams& p) {
  const LaneSpan span = occupied_lanes(entity_phys(s, e), p.lanes);
  NeighborRef best;
  double best_gap = kInf;
  for (int lane = span.lo; lane <= span.hi; ++lane) {
    NeighborRef lead = nearest_leader(s, e, lane, p);
    if (lead.exists() && lead.gap < best_gap) {
      best_gap = lead.gap;
      best = lead;
    }
  }
  return best;
}

double entity_accel_bound(const SceneState& s, int e, const SimParams& p) {
  NeighborRef lead = min_gap_leader(s, e, p);
  if (!lead.exists()) return kInf;
  const PhysicalState& ph = entity_phys(s, e);
  return max_safe_accel_bound(ph.vx, lead.speed, lead.gap, p.brake_limit,
                              p.dt);
}

LongitudinalContext make_context(double speed, const NeighborRef& leader) {
  LongitudinalContext ctx;
  ctx.speed = speed;
  if (leader.exists()) {
    ctx.has_leader = true;
    // Transitional co-occupancy can present a degenerate gap; keep it usable.
    ctx.gap = std::max(leader.gap, 0.01);
    ctx.approach_rate = speed - leader.speed;
  }
  return ctx;
}

StepEvents compute_events(const SceneState& before, const SceneState& after,
                          const SimParams& p) {
  StepEvents ev;
  const double drop_limit = p.hard_brake * p.dt;
  if (before.ego.vx - after.ego.vx > drop_limit) {
    ev.ego_hard_brake = true;
    ++ev.hard_brake_count;
  }
  if (after.ego.vx < p.slow_speed) ev.ego_too_slow = true;
  for (const Vehicle& c : after.cars) {
    if (c.phys.vx < p.slow_speed) ev.other_too_slow = true;
    for (const Vehicle& b : before.cars) {
      if (b.id != c.id) continue;
      if (b.phys.vx - c.phys.vx > drop_limit) {
        ev.other_hard_brake = true;
        ++ev.hard_brake_count;
      }
      break;
    }
  }
  return ev;
}

void coordinate_merges(const SceneState& s, ChangeProposal* proposals,
                       int count, const SimParams& p,
                       const DriverParams& ego_proxy) {
  int order[kMaxVehicles + 1];
  for (int i = 0; i < count; ++i) order[i] = i;
  std::sort(order, order + count, [&](int a, int b) {
    const double xa = entity_phys(s, proposals[a].entity).x;
    const double xb = entity_phys(s, proposals[b].entity).x;
    if (xa != xb) return xa > xb;
    return proposals[a].entity < proposals[b].entity;
  });
  for (int i = 1; i < count; ++i) {
    ChangeProposal& rear = proposals[order[i]];
    const PhysicalState& rp = entity_phys(s, rear.entity);
    for (int j = 0; j < i; ++j) {
      const ChangeProposal& front = proposals[order[j]];
      if (front.canceled || front.dest_lane != rear.dest_lane) continue;
      const PhysicalState& fp = entity_phys(s, front.entity);
      const double gap = (fp.x - rp.x) - p.vehicle_length;
      const DriverParams& rd =
          rear.entity == kEgoEntity ? ego_proxy : s.cars[rear.entity].behavior;
      LongitudinalContext ctx;
      ctx.speed = rp.vx;
      ctx.approach_rate = rp.vx - fp.vx;
      if (gap <= desired_gap(rd.idm, ctx)) {
        rear.canceled = true;
        break;
      }
    }
  }
}

EpisodeStatus episode_status(const SceneState& s, const SimParams& p) {
  const bool in_target = s.ego.vy == 0.0 && s.ego.y == p.target_lane();
  if (in_target && s.odometer <= p.distance_limit) {
    return EpisodeStatus::success;
  }
  if (s.odometer >= p.distance_limit && !in_target) {
    return EpisodeStatus::distance_exceeded;
  }
  return EpisodeStatus::ongoing;
}

HighwaySim::HighwaySim(const SimParams& p, const BehaviorDistribution& dist)
    : p_(p), dist_(dist), normal_(normal_driver(dist)) {
  // IDM never exceeds max_accel and noise never exceeds half of it.
  follower_accel_bound_ = 1.5 * driver_from_rank(dist, 1.0).idm.max_accel;
}

SceneState HighwaySim::step(const SceneState& s, const EgoAction& a, Rng& rng,
                            StepEvents* ev) const {
  const int n = static_cast<int>(s.cars.size());
  if (!(a.accel >= -p_.brake_limit - 1e-9 && a.accel <= 3.0)) {
    throw std::invalid_argument("ego acceleration outside the admissible set");
  }
  if (a.lat != LatCommand::keep && !at_center(s.ego)) {
    throw std::invalid_argument("lane change commanded while one is underway");
  }

  // Pass 1: longitudinal decisions, all from the common pre-step state.
  double car_accel[kMaxVehicles];
  double car_idm[kMaxVehicles];
  for (int i = 0; i < n; ++i) {
    const Vehicle& car = s.cars[i];
    const NeighborRef lead = min_gap_leader(s, i, p_);
    double base = idm_accel(car.behavior.idm, make_context(car.phys.vx, lead));
    car_idm[i] = base;
    double bound = kInf;
    if (lead.exists()) {
      const double half = 0.5 * car.behavior.idm.max_accel;
      const double most = std::max(-p_.brake_limit, base) + half;
      // Exact bound only when the largest possible post-noise acceleration
      // is not already worst-case safe.
      if (!worst_case_clear(car.phys.vx, most, lead.speed, lead.gap,
                            p_.brake_limit, p_.dt)) {
        bound = max_safe_accel_bound(car.phys.vx, lead.speed, lead.gap,
                                     p_.brake_limit, p_.dt);
      }
    }
    base = std::max(-p_.brake_limit, std::min(base, bound));
    NoiseConstraint c;
    c.max_up = std::max(0.0, bound - base);
    c.max_down = std::max(0.0, base + p_.hard_brake);
    const double noisy = base + sample_accel_noise(car.behavior.idm, rng, c);
    car_accel[i] = std::max(-p_.brake_limit, std::min(noisy, bound));
  }
  const double ego_bound = entity_accel_bound(s, kEgoEntity, p_);
  const double ego_accel = std::max(-p_.brake_limit, std::min(a.accel, ego_bound));
  // Other drivers book-keep the ego as a plain IDM car with normal behavior.
  const double ego_idm = idm_accel(
      normal_.idm, make_context(s.ego.vx, min_gap_leader(s, kEgoEntity, p_)));

  const auto idm_of = [&](int e) { return e == kEgoEntity ? ego_idm : car_idm[e]; };
  const auto accel_of = [&](int e) {
    return e == kEgoEntity ? ego_accel : car_accel[e];
  };
  const auto params_of = [&](int e) -> const DriverParams& {
    return e == kEgoEntity ? normal_ : s.cars[e].behavior;
  };
  const auto clear_to_lead = [&](int e, double first_accel,
                                 const NeighborRef& lead) {
    const PhysicalState& ph = entity_phys(s, e);
    return worst_case_clear(ph.vx, first_accel, lead.speed, lead.gap,
                            p_.brake_limit, p_.dt);
  };
  const auto clear_from_follow = [&](int e, const NeighborRef& follow) {
    const PhysicalState& ph = entity_phys(s, e);
    return worst_case_clear(follow.speed, accel_of(follow.entity), ph.vx,
                            follow.gap, p_.brake_limit, p_.dt);
  };

  // Pass 2: lane-change proposals.
  FixedVec<ChangeProposal, kMaxVehicles + 1> props;
  if (a.lat != LatCommand::keep) {
    const int lane = static_cast<int>(std::lround(s.ego.y));
    const int dest = lane + (a.lat == LatCommand::begin_left ? 1 : -1);
    if (dest < 0 || dest >= p_.lanes) {
      throw std::invalid_argument("lane change off the road");
    }
    // Re-checked with this step's actual accelerations; the action pruning
    // already gated this conservatively, so legal actions always pass.
    const NeighborRef dest_lead = nearest_leader(s, kEgoEntity, dest, p_);
    const NeighborRef dest_follow = nearest_follower(s, kEgoEntity, dest, p_);
    bool ok = !dest_lead.exists() ||
              clear_to_lead(kEgoEntity, ego_accel, dest_lead);
    if (ok && dest_follow.exists()) ok = clear_from_follow(kEgoEntity, dest_follow);
    if (ok) props.push_back({kEgoEntity, dest, false});
  }
  for (int i = 0; i < n; ++i) {
    const Vehicle& car = s.cars[i];
    if (!at_center(car.phys)) continue;
    const int lane = static_cast<int>(std::lround(car.phys.y));
    int best_dest = -1;
    double best_inc = -kInf;
    for (const int dir : {+1, -1}) {  // left first; ties go left
      const int dest = lane + dir;
      if (dest < 0 || dest >= p_.lanes) continue;
      const NeighborRef dest_lead = nearest_leader(s, i, dest, p_);
      const NeighborRef dest_follow = nearest_follower(s, i, dest, p_);
      const NeighborRef old_follow = nearest_follower(s, i, lane, p_);
      NeighborhoodAccels cur, hyp;
      cur.candidate = car_idm[i];
      hyp.candidate =
          idm_accel(car.behavior.idm, make_context(car.phys.vx, dest_lead));
      if (dest_follow.exists()) {
        cur.new_follower = idm_of(dest_follow.entity);
        NeighborRef as_lead{i, dest_follow.gap, car.phys.vx};
        hyp.new_follower =
            idm_accel(params_of(dest_follow.entity).idm,
                      make_context(dest_follow.speed, as_lead));
      }
      if (old_follow.exists()) {
        cur.old_follower = idm_of(old_follow.entity);
        const NeighborRef next_lead =
            nearest_leader(s, old_follow.entity, lane, p_, /*exclude=*/i);
        hyp.old_follower =
            idm_accel(params_of(old_follow.entity).idm,
                      make_context(old_follow.speed, next_lead));
      }
      if (!mobil_decision(car.behavior, cur, hyp)) continue;
      if (dest_lead.exists() && !clear_to_lead(i, car_accel[i], dest_lead)) {
        continue;
      }
      if (dest_follow.exists() && !clear_from_follow(i, dest_follow)) continue;
      const double inc = mobil_incentive(car.behavior.mobil, cur, hyp);
      if (inc > best_inc) {
        best_inc = inc;
        best_dest = dest;
      }
    }
    if (best_dest >= 0) props.push_back({i, best_dest, false});
  }
  coordinate_merges(s, props.begin(), static_cast<int>(props.size()), p_,
                    normal_);

  // Integration.
  SceneState next = s;
  for (const ChangeProposal& pr : props) {
    if (pr.canceled) continue;
    PhysicalState& ph =
        pr.entity == kEgoEntity ? next.ego : next.cars[pr.entity].phys;
    ph.vy = (pr.dest_lane > ph.y ? 1.0 : -1.0) * p_.lane_change_rate;
  }
  const auto advance = [&](PhysicalState& ph, double acc) {
    integrate_longitudinal(ph.x, ph.vx, acc, p_.dt);
    if (ph.vy == 0.0) return;
    const double dest = ph.vy > 0.0 ? std::floor(ph.y + kLaneEps) + 1.0
                                    : std::ceil(ph.y - kLaneEps) - 1.0;
    const double y = ph.y + ph.vy * p_.dt;
    if ((ph.vy > 0.0 && y >= dest - kLaneEps) ||
        (ph.vy < 0.0 && y <= dest + kLaneEps)) {
      ph.y = dest;  // snap exactly onto the center
      ph.vy = 0.0;
    } else {
      ph.y = y;
    }
  };
  advance(next.ego, ego_accel);
  for (int i = 0; i < n; ++i) advance(next.cars[i].phys, car_accel[i]);
  next.odometer += next.ego.x - s.ego.x;

  // Despawn strictly outside the window (new arrivals sit exactly on it).
  for (std::size_t i = next.cars.size(); i-- > 0;) {
    if (std::abs(next.cars[i].phys.x - next.ego.x) > p_.window()) {
      next.cars.erase_at(i);
    }
  }
  if (static_cast<int>(next.cars.size()) < p_.max_vehicles) {
    try_spawn(next, rng);
  }
  if (ev != nullptr) *ev = compute_events(s, next, p_);
  return next;
}

bool HighwaySim::try_spawn(SceneState& s, Rng& rng) const {
  const DriverParams theta =
      spawn_normal_ ? normal_ : sample_driver(dist_, rng);
  const double speed = std::max(
      0.0, theta.idm.desired_speed + p_.vel_noise_std * draw_normal(rng));
  // Slower traffic appears ahead, faster traffic behind.
  const bool front = speed < s.ego.vx;
  const double x = s.ego.x + (front ? p_.window() : -p_.window());

  int best_lane = -1;
  double best_clear = -kInf;
  for (int lane = 0; lane < p_.lanes; ++lane) {
    double clearance = kInf;
    for_each_entity(s, [&](int e) {
      const PhysicalState& ph = entity_phys(s, e);
      if (!occupied_lanes(ph, p_.lanes).contains(lane)) return;
      clearance = std::min(clearance, std::abs(ph.x - x) - p_.vehicle_length);
    });
    const NeighborRef lead = nearest_leader_at(s, x, lane, p_);
    const NeighborRef follow = nearest_follower_at(s, x, lane, p_);
    double gstar = 0.0;
    if (front && follow.exists()) {
      const DriverParams& fd = follow.entity == kEgoEntity
                                   ? normal_
                                   : s.cars[follow.entity].behavior;
      LongitudinalContext ctx;
      ctx.speed = follow.speed;
      ctx.approach_rate = follow.speed - speed;
      gstar = desired_gap(fd.idm, ctx);
    } else if (!front && lead.exists()) {
      LongitudinalContext ctx;
      ctx.speed = speed;
      ctx.approach_rate = speed - lead.speed;
      gstar = desired_gap(theta.idm, ctx);
    }
    if (!(clearance > gstar)) continue;
    // Full braking must keep both adjacent pairs collision-free, or the
    // crash-freedom invariant would not survive the insertion.
    if (lead.exists() &&
        !worst_case_clear(speed, -p_.brake_limit, lead.speed, lead.gap,
                          p_.brake_limit, p_.dt)) {
      continue;
    }
    if (follow.exists() &&
        !worst_case_clear(follow.speed, -p_.brake_limit, speed, follow.gap,
                          p_.brake_limit, p_.dt)) {
      continue;
    }
    if (clearance > best_clear) {  // strict: ties keep the lowest lane
      best_clear = clearance;
      best_lane = lane;
    }
  }
  if (best_lane < 0) return false;
  Vehicle v;
  v.behavior = theta;
  v.id = s.next_id++;
  v.phys = {x, static_cast<double>(best_lane), speed, 0.0};
  s.cars.push_back(v);
  return true;
}

SceneState HighwaySim::initial_scene(Rng& rng) const {
  SceneState s;
  s.ego = {0.0, 0.0, normal_.idm.desired_speed, 0.0};
  for (int k = 0; k < 200; ++k) {
    const NeighborRef lead = min_gap_leader(s, kEgoEntity, p_);
    double acc = idm_accel(normal_.idm, make_context(s.ego.vx, lead));
    if (lead.exists()) {
      acc = std::min(acc, max_safe_accel_bound(s.ego.vx, lead.speed, lead.gap,
                                               p_.brake_limit, p_.dt));
    }
    acc = std::clamp(acc, -p_.brake_limit, 3.0);
    s = step(s, {acc, LatCommand::keep}, rng);
  }
  const double shift = s.ego.x;
  s.ego.x = 0.0;
  for (Vehicle& c : s.cars) c.phys.x -= shift;
  s.odometer = 0.0;
  return s;
}

}  // namespace laneplan
