#include "laneplan/belief.hpp"

#include <algorithm>
#include <cmath>

#include "laneplan/safety.hpp"

namespace laneplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SceneState scene_from(const Observation& o, const DriverParams& fill) {
  SceneState s;
  s.ego = o.ego;
  s.odometer = o.odometer;
  std::uint32_t max_id = 0;
  for (const VehicleObs& c : o.cars) {
    s.cars.push_back({c.phys, fill, c.id});
    max_id = std::max(max_id, c.id);
  }
  s.next_id = max_id + 1;
  return s;
}

int lane_of(double y) { return static_cast<int>(std::lround(y)); }

}  // namespace

InternalStateFilter::InternalStateFilter(const BehaviorDistribution& dist,
                                         const SimParams& p,
                                         const FilterConfig& cfg)
    : dist_(dist), p_(p), cfg_(cfg), normal_(normal_driver(dist)) {}

InternalStateFilter::Particles InternalStateFilter::make_prior(Rng& rng) const {
  Particles ps;
  ps.weight.assign(cfg_.particles, 1.0);
  if (cfg_.variant == FilterVariant::joint) {
    ps.theta.reserve(cfg_.particles);
    for (int m = 0; m < cfg_.particles; ++m) {
      ps.theta.push_back(sample_driver(dist_, rng));
    }
  } else {
    ps.rank.reserve(cfg_.particles);
    for (int m = 0; m < cfg_.particles; ++m) {
      ps.rank.push_back(draw_unit(rng));
    }
  }
  return ps;
}

DriverParams InternalStateFilter::particle_params(const Particles& ps,
                                                  int m) const {
  if (cfg_.variant == FilterVariant::joint) return ps.theta[m];
  return driver_from_rank(dist_, ps.rank[m]);
}

void InternalStateFilter::reset(const Observation& o, Rng& rng) {
  physics_ = o;
  sets_.clear();
  for (const VehicleObs& c : o.cars) {
    sets_.emplace(c.id, make_prior(rng));
  }
}

void InternalStateFilter::update(const EgoAction& u, const Observation& o,
                                 Rng& rng) {
  // Pre-step scene from the previous observation; neighbors are modeled with
  // normal parameters since their own latent states are filtered separately.
  const SceneState prev = scene_from(physics_, normal_);

  for (const VehicleObs& obs : o.cars) {
    auto it = sets_.find(obs.id);
    if (it == sets_.end()) {
      sets_.emplace(obs.id, make_prior(rng));
      continue;
    }
    // Locate this vehicle in the pre-step scene; a despawn/respawn reusing an
    // id cannot happen (ids are never reused).
    int idx = -1;
    for (int i = 0; i < static_cast<int>(prev.cars.size()); ++i) {
      if (prev.cars[i].id == obs.id) {
        idx = i;
        break;
      }
    }
    if (idx < 0) continue;  // not visible before: nothing to condition on
    Particles& ps = it->second;
    const int M = cfg_.particles;

    // Resample proportional to the carried weights (systematic).
    {
      double total = 0.0;
      for (double w : ps.weight) total += w;
      const double u0 = draw_unit(rng) / M;
      Particles out;
      out.weight.assign(M, 1.0);
      if (cfg_.variant == FilterVariant::joint) out.theta.reserve(M);
      else out.rank.reserve(M);
      int j = 0;
      double cum = ps.weight[0] / total;
      for (int m = 0; m < M; ++m) {
        const double target = u0 + static_cast<double>(m) / M;
        while (target > cum && j + 1 < M) {
          ++j;
          cum += ps.weight[j] / total;
        }
        if (cfg_.variant == FilterVariant::joint) out.theta.push_back(ps.theta[j]);
        else out.rank.push_back(ps.rank[j]);
      }
      ps = std::move(out);
    }

    // Parameter-independent pieces of this vehicle's one-step prediction.
    const PhysicalState& ph = prev.cars[idx].phys;
    const NeighborRef lead = min_gap_leader(prev, idx, p_);
    double bound = kInf;
    if (lead.exists()) {
      bound = max_safe_accel_bound(ph.vx, lead.speed, lead.gap, p_.brake_limit,
                                   p_.dt);
    }
    const bool centered = ph.vy == 0.0 && ph.y == std::floor(ph.y);
    const int lane = lane_of(ph.y);
    struct Side {
      bool feasible = false;
      bool gate_ok = false;       // parameter-independent gates
      NeighborRef dest_lead;
      double follower_cur = 0.0;  // normal-IDM accel terms for MOBIL
      double follower_hyp = 0.0;
      double old_cur = 0.0;
      double old_hyp = 0.0;
      bool has_follower = false;
      bool has_old = false;
    };
    Side side[2];
    if (centered) {
      for (int k = 0; k < 2; ++k) {
        const int dest = lane + (k == 0 ? 1 : -1);
        if (dest < 0 || dest >= p_.lanes) continue;
        Side& sd = side[k];
        sd.feasible = true;
        sd.dest_lead = nearest_leader(prev, idx, dest, p_);
        const NeighborRef follow = nearest_follower(prev, idx, dest, p_);
        const NeighborRef old_follow = nearest_follower(prev, idx, lane, p_);
        sd.gate_ok = true;
        if (follow.exists()) {
          sd.has_follower = true;
          const double f_accel =
              follow.entity == kEgoEntity
                  ? u.accel
                  : idm_accel(normal_.idm,
                              make_context(follow.speed,
                                           min_gap_leader(prev, follow.entity,
                                                          p_)));
          sd.follower_cur = idm_accel(
              normal_.idm,
              make_context(follow.speed,
                           min_gap_leader(prev, follow.entity, p_)));
          NeighborRef as_lead{idx, follow.gap, ph.vx};
          sd.follower_hyp = idm_accel(
              normal_.idm, make_context(follow.speed, as_lead));
          if (!worst_case_clear(follow.speed,
                                std::max(-p_.brake_limit, f_accel), ph.vx,
                                follow.gap, p_.brake_limit, p_.dt)) {
            sd.gate_ok = false;
          }
        }
        if (old_follow.exists()) {
          sd.has_old = true;
          sd.old_cur = idm_accel(
              normal_.idm,
              make_context(old_follow.speed,
                           min_gap_leader(prev, old_follow.entity, p_)));
          const NeighborRef next_lead =
              nearest_leader(prev, old_follow.entity, lane, p_, idx);
          sd.old_hyp = idm_accel(normal_.idm,
                                 make_context(old_follow.speed, next_lead));
        }
      }
    }
    const LongitudinalContext own_ctx = make_context(ph.vx, lead);
    const int obs_lane = lane_of(obs.phys.y);

    // Propagate every particle and reweight against the observation.
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
      const DriverParams theta = particle_params(ps, m);
      double base = idm_accel(theta.idm, own_ctx);
      base = std::max(-p_.brake_limit, std::min(base, bound));
      NoiseConstraint c;
      c.max_up = std::max(0.0, bound - base);
      c.max_down = std::max(0.0, base + p_.hard_brake);
      double accel = base + sample_accel_noise(theta.idm, rng, c);
      accel = std::max(-p_.brake_limit, std::min(accel, bound));
      double px = ph.x, pv = ph.vx;
      integrate_longitudinal(px, pv, accel, p_.dt);

      double py = ph.y;
      if (ph.vy != 0.0) {
        py += ph.vy * p_.dt;  // continue the ongoing change
      } else if (centered) {
        // Would this particle's driver begin a change? Merge coordination is
        // not replayed here; a wrong guess costs the lane-mismatch factor.
        int choice = 0;
        double best_inc = -kInf;
        for (int k = 0; k < 2; ++k) {
          const Side& sd = side[k];
          if (!sd.feasible || !sd.gate_ok) continue;
          NeighborhoodAccels cur, hyp;
          cur.candidate = idm_accel(theta.idm, own_ctx);
          hyp.candidate =
              idm_accel(theta.idm, make_context(ph.vx, sd.dest_lead));
          if (sd.has_follower) {
            cur.new_follower = sd.follower_cur;
            hyp.new_follower = sd.follower_hyp;
          }
          if (sd.has_old) {
            cur.old_follower = sd.old_cur;
            hyp.old_follower = sd.old_hyp;
          }
          if (!mobil_decision(theta, cur, hyp)) continue;
          if (sd.dest_lead.exists() &&
              !worst_case_clear(ph.vx, accel, sd.dest_lead.speed,
                                sd.dest_lead.gap, p_.brake_limit, p_.dt)) {
            continue;
          }
          const double inc = mobil_incentive(theta.mobil, cur, hyp);
          if (inc > best_inc) {
            best_inc = inc;
            choice = (k == 0 ? +1 : -1);
          }
        }
        if (choice != 0) py += choice * p_.lane_change_rate * p_.dt;
      }

      const double abar = theta.idm.max_accel;
      double w = std::max(0.0, (abar - 2.0 * std::abs(obs.phys.vx - pv)) / abar);
      if (lane_of(py) != obs_lane) w *= cfg_.lane_mismatch;
      ps.weight[m] = w;
      total += w;
    }
    if (total <= 0.0) {
      // Depletion: fall back to the prior rather than dividing by zero.
      ps = make_prior(rng);
    }
  }

  // Drop departed vehicles.
  for (auto it = sets_.begin(); it != sets_.end();) {
    bool live = false;
    for (const VehicleObs& c : o.cars) {
      if (c.id == it->first) {
        live = true;
        break;
      }
    }
    it = live ? std::next(it) : sets_.erase(it);
  }
  physics_ = o;
}

SceneState InternalStateFilter::sample_scene(Rng& rng) const {
  SceneState s = scene_from(physics_, normal_);
  for (Vehicle& car : s.cars) {
    const auto it = sets_.find(car.id);
    if (it == sets_.end()) continue;
    const Particles& ps = it->second;
    double total = 0.0;
    for (double w : ps.weight) total += w;
    const double target = draw_unit(rng) * total;
    double cum = 0.0;
    int pick = cfg_.particles - 1;
    for (int m = 0; m < cfg_.particles; ++m) {
      cum += ps.weight[m];
      if (target < cum) {
        pick = m;
        break;
      }
    }
    car.behavior = particle_params(ps, pick);
  }
  return s;
}

SceneState InternalStateFilter::mean_scene() const {
  SceneState s = scene_from(physics_, normal_);
  for (Vehicle& car : s.cars) {
    if (sets_.count(car.id) != 0) car.behavior = mean_params(car.id);
  }
  return s;
}

DriverParams InternalStateFilter::mean_params(std::uint32_t id) const {
  const Particles& ps = sets_.at(id);
  double total = 0.0;
  for (double w : ps.weight) total += w;
  if (cfg_.variant == FilterVariant::aggressiveness) {
    return driver_from_rank(dist_, mean_rank(id));
  }
  DriverParams out = normal_;
  double sums[8] = {};
  for (int m = 0; m < cfg_.particles; ++m) {
    const DriverParams& t = ps.theta[m];
    const double w = ps.weight[m] / total;
    sums[0] += w * t.idm.desired_speed;
    sums[1] += w * t.idm.time_gap;
    sums[2] += w * t.idm.jam_distance;
    sums[3] += w * t.idm.max_accel;
    sums[4] += w * t.idm.comfort_decel;
    sums[5] += w * t.mobil.politeness;
    sums[6] += w * t.mobil.safe_braking;
    sums[7] += w * t.mobil.accel_threshold;
  }
  out.idm.desired_speed = sums[0];
  out.idm.time_gap = sums[1];
  out.idm.jam_distance = sums[2];
  out.idm.max_accel = sums[3];
  out.idm.comfort_decel = sums[4];
  out.idm.accel_exponent = dist_.idm_exponent;
  out.mobil.politeness = sums[5];
  out.mobil.safe_braking = sums[6];
  out.mobil.accel_threshold = sums[7];
  return out;
}

double InternalStateFilter::mean_rank(std::uint32_t id) const {
  const Particles& ps = sets_.at(id);
  double total = 0.0, acc = 0.0;
  for (int m = 0; m < cfg_.particles; ++m) {
    total += ps.weight[m];
    acc += ps.weight[m] * ps.rank[m];
  }
  return acc / total;
}

}  // namespace laneplan
