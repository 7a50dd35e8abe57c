#include "laneplan/belief.hpp"

#include <cmath>

#include "laneplan/safety.hpp"
#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "stat_utils.hpp"

using namespace laneplan;

namespace {

Observation one_car_obs(const PhysicalState& car, std::uint32_t id = 1) {
  Observation o;
  o.ego = {0.0, 0.0, 30.0, 0.0};
  o.cars.push_back({id, car});
  return o;
}

// Mirrors the simulator's free-road car update (no leader: the safety bound
// never binds), which is also the filter's internal prediction model.
PhysicalState free_step(const DriverParams& theta, const PhysicalState& ph,
                        const SimParams& p, Rng& rng) {
  LongitudinalContext ctx;
  ctx.speed = ph.vx;
  double base = std::max(-p.brake_limit, idm_accel(theta.idm, ctx));
  NoiseConstraint c;
  c.max_down = std::max(0.0, base + p.hard_brake);
  const double accel =
      std::max(-p.brake_limit, base + sample_accel_noise(theta.idm, rng, c));
  PhysicalState next = ph;
  integrate_longitudinal(next.x, next.vx, accel, p.dt);
  return next;
}

double free_base_accel(const DriverParams& theta, double vx) {
  LongitudinalContext ctx;
  ctx.speed = vx;
  return std::max(-8.0, idm_accel(theta.idm, ctx));
}

}  // namespace

TEST_CASE("fresh priors match the population distribution") {
  SimParams p;

  SUBCASE("aggressiveness ranks are uniform on [0,1]") {
    FilterConfig cfg;
    cfg.variant = FilterVariant::aggressiveness;
    cfg.particles = 2000;
    InternalStateFilter f(BehaviorDistribution::scenario(2), p, cfg);
    Rng rng(1);
    f.reset(one_car_obs({20.0, 1.0, 30.0, 0.0}), rng);
    // Standard error of a uniform mean: 3 sigma / sqrt(M) with sigma = 1/sqrt(12).
    CHECK(std::abs(f.mean_rank(1) - 0.5) < 3.0 * 0.2887 / std::sqrt(2000.0));
  }
  SUBCASE("joint particles center on the normal archetype") {
    FilterConfig cfg;
    cfg.particles = 5000;
    InternalStateFilter f(BehaviorDistribution::scenario(1), p, cfg);
    Rng rng(2);
    f.reset(one_car_obs({20.0, 1.0, 30.0, 0.0}), rng);
    const DriverParams m = f.mean_params(1);
    CHECK(std::abs(m.idm.desired_speed - 33.35) < 3.0 * (11.1 / 3.4641) / std::sqrt(5000.0));
    CHECK(std::abs(m.idm.time_gap - 1.5) < 3.0 * (1.0 / 3.4641) / std::sqrt(5000.0));
    CHECK(m.idm.accel_exponent == 4.0);
  }
}

TEST_CASE("posterior sampling follows the weights") {
  SimParams p;
  FilterConfig cfg;
  cfg.variant = FilterVariant::aggressiveness;
  cfg.particles = 4;
  const BehaviorDistribution dist = BehaviorDistribution::scenario(2);
  InternalStateFilter f(dist, p, cfg);
  Rng rng(3);
  const PhysicalState car{20.0, 1.0, 30.0, 0.0};
  f.reset(one_car_obs(car), rng);

  SUBCASE("uniform weights draw each particle equally") {
    std::map<double, int> tally;
    Rng draw(4);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      SceneState s = f.sample_scene(draw);
      REQUIRE(s.cars.size() == 1);
      tally[aggressiveness_of(s.cars[0].behavior, dist.table)] += 1;
    }
    REQUIRE(tally.size() == 4);
    for (const auto& [rank, count] : tally) {
      CHECK(std::abs(count / static_cast<double>(n) - 0.25) < 0.02);
    }
    // The posterior mean is the same average the sampler realizes.
    double rank_sum = 0.0;
    for (const auto& [rank, count] : tally) rank_sum += rank;
    CHECK(f.mean_rank(1) == doctest::Approx(rank_sum / 4.0).epsilon(1e-9));
  }
  SUBCASE("after reweighting, draw shares and the mean agree") {
    // One update with the observed speed at the current value leaves unequal
    // weights across the four ranks.
    PhysicalState moved = car;
    moved.x += 22.5;
    f.update({0.0, LatCommand::keep}, one_car_obs(moved), rng);
    std::map<double, int> tally;
    Rng draw(5);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      SceneState s = f.sample_scene(draw);
      tally[aggressiveness_of(s.cars[0].behavior, dist.table)] += 1;
    }
    double mean_from_shares = 0.0;
    for (const auto& [rank, count] : tally) {
      mean_from_shares += rank * (count / static_cast<double>(n));
    }
    CHECK(f.mean_rank(1) == doctest::Approx(mean_from_shares).epsilon(0.01));
  }
}

TEST_CASE("sampled and mean scenes carry the exact observed physics") {
  SimParams p;
  FilterConfig cfg;
  cfg.particles = 50;
  InternalStateFilter f(BehaviorDistribution::scenario(3), p, cfg);
  Rng rng(6);
  Observation o;
  o.ego = {12.5, 1.0, 31.0, 0.67};
  o.odometer = 345.0;
  o.cars.push_back({4, {40.0, 2.0, 28.0, 0.0}});
  o.cars.push_back({9, {-15.0, 0.0, 33.0, 0.0}});
  f.reset(o, rng);

  CHECK(f.physics().ego.x == o.ego.x);
  CHECK(f.physics().cars.size() == 2);
  for (SceneState s : {f.sample_scene(rng), f.mean_scene()}) {
    CHECK(s.ego.x == o.ego.x);
    CHECK(s.ego.vy == o.ego.vy);
    CHECK(s.odometer == o.odometer);
    REQUIRE(s.cars.size() == 2);
    CHECK(s.cars[0].id == 4);
    CHECK(s.cars[0].phys.x == 40.0);
    CHECK(s.cars[1].id == 9);
    CHECK(s.cars[1].phys.vx == 33.0);
    CHECK(s.next_id == 10);
  }
}

TEST_CASE("the weight support decides survival of a single particle") {
  // With M = 1 an update either keeps the particle (positive weight) or
  // reinitializes from the prior (weight zero), which exposes the triangular
  // likelihood's support boundaries through the public interface.
  SimParams p;
  FilterConfig cfg;
  cfg.particles = 1;
  const PhysicalState car{20.0, 0.0, 30.0, 0.0};

  const auto run_update = [&](double obs_vx, double obs_y, int seed,
                              DriverParams* before) {
    InternalStateFilter f(BehaviorDistribution::scenario(3), p, cfg);
    Rng rng(seed);
    f.reset(one_car_obs(car), rng);
    *before = f.mean_params(1);
    PhysicalState moved = car;
    moved.x += 22.5;
    moved.vx = obs_vx;
    moved.y = obs_y;
    f.update({0.0, LatCommand::keep}, one_car_obs(moved), rng);
    return f.mean_params(1);
  };

  DriverParams theta;
  // Pre-read the particle to aim the observation at its prediction center;
  // the filter's own noise keeps the residual below a_bar/2, so the weight
  // stays positive whatever it draws.
  {
    InternalStateFilter probe(BehaviorDistribution::scenario(3), p, cfg);
    Rng rng(7);
    probe.reset(one_car_obs(car), rng);
    theta = probe.mean_params(1);
  }
  const double center_vx =
      car.vx + free_base_accel(theta, car.vx) * p.dt;

  SUBCASE("an observation inside the noise support keeps the particle") {
    DriverParams before;
    DriverParams after = run_update(center_vx, 0.0, 7, &before);
    CHECK(after.idm.time_gap == before.idm.time_gap);
    CHECK(after.idm.desired_speed == before.idm.desired_speed);
    CHECK(after.mobil.politeness == before.mobil.politeness);
  }
  SUBCASE("an observation outside the support depletes and reinitializes") {
    DriverParams before;
    DriverParams after = run_update(center_vx + 2.0 * theta.idm.max_accel,
                                    0.0, 7, &before);
    CHECK(after.idm.time_gap != before.idm.time_gap);
  }
  SUBCASE("a wrong lane discounts the weight but does not kill it") {
    DriverParams before;
    DriverParams after = run_update(center_vx, 1.0, 7, &before);
    CHECK(after.idm.time_gap == before.idm.time_gap);
  }
}

TEST_CASE("speed evidence moves the aggressiveness posterior the right way") {
  SimParams p;
  FilterConfig cfg;
  cfg.variant = FilterVariant::aggressiveness;
  cfg.particles = 2000;
  InternalStateFilter f(BehaviorDistribution::scenario(2), p, cfg);
  Rng rng(8);
  const PhysicalState car{20.0, 1.0, 30.0, 0.0};
  f.reset(one_car_obs(car), rng);

  // A 1.6 m/s step-up in speed is reachable only by strong accelerators.
  PhysicalState fast = car;
  fast.x += 22.5;
  fast.vx = 31.6;
  f.update({0.0, LatCommand::keep}, one_car_obs(fast), rng);
  CHECK(f.mean_rank(1) > 0.6);
  CHECK(f.mean_rank(1) < 1.0);
}

TEST_CASE("speed evidence shifts the identified joint marginals only") {
  SimParams p;
  FilterConfig cfg;
  cfg.particles = 5000;
  InternalStateFilter f(BehaviorDistribution::scenario(1), p, cfg);
  Rng rng(9);
  const PhysicalState car{20.0, 1.0, 30.0, 0.0};
  f.reset(one_car_obs(car), rng);

  PhysicalState fast = car;
  fast.x += 22.5;
  fast.vx = 31.6;
  f.update({0.0, LatCommand::keep}, one_car_obs(fast), rng);
  const DriverParams m = f.mean_params(1);
  CHECK(m.idm.max_accel > 1.4);      // acceleration capability identified
  CHECK(m.idm.desired_speed > 33.35);  // headroom above 30 identified
  // The time gap plays no role without a leader and stays at its prior mean.
  CHECK(std::abs(m.idm.time_gap - 1.5) < 0.1);
}

TEST_CASE("vehicles entering and leaving the scene") {
  SimParams p;
  FilterConfig cfg;
  cfg.variant = FilterVariant::aggressiveness;
  cfg.particles = 500;
  InternalStateFilter f(BehaviorDistribution::scenario(2), p, cfg);
  Rng rng(10);
  f.reset(one_car_obs({20.0, 1.0, 30.0, 0.0}, 1), rng);

  // A new id arrives: it gets a fresh prior while the old one is conditioned.
  Observation two;
  two.ego = {22.5, 0.0, 30.0, 0.0};
  two.cars.push_back({1, {42.0, 1.0, 30.2, 0.0}});
  two.cars.push_back({2, {-20.0, 2.0, 35.0, 0.0}});
  f.update({0.0, LatCommand::keep}, two, rng);
  CHECK(std::abs(f.mean_rank(2) - 0.5) < 3.0 * 0.2887 / std::sqrt(500.0));
  CHECK_NOTHROW(f.mean_rank(1));

  // The old id departs: its particle set is dropped.
  Observation gone;
  gone.ego = {45.0, 0.0, 30.0, 0.0};
  gone.cars.push_back({2, {0.0, 2.0, 35.0, 0.0}});
  f.update({0.0, LatCommand::keep}, gone, rng);
  CHECK_THROWS_AS(f.mean_rank(1), std::out_of_range);
  CHECK_NOTHROW(f.mean_rank(2));

  // reset drops everything not in the new observation.
  f.reset(one_car_obs({0.0, 3.0, 28.0, 0.0}, 7), rng);
  CHECK_THROWS_AS(f.mean_rank(2), std::out_of_range);
  CHECK_NOTHROW(f.mean_rank(7));
}

TEST_CASE("thirty observations pin a driver down better than five") {
  SimParams p;
  FilterConfig cfg;
  cfg.variant = FilterVariant::aggressiveness;
  cfg.particles = 500;
  const BehaviorDistribution dist = BehaviorDistribution::scenario(2);

  std::vector<double> err5, err30;
  for (int trial = 0; trial < 100; ++trial) {
    Rng world(5000 + trial);
    Rng belief(9000 + trial);
    const double truth = draw_unit(world);
    const DriverParams theta = driver_from_rank(dist, truth);
    PhysicalState car{100.0, 3.0, 30.0, 0.0};  // far from the static ego

    InternalStateFilter f(dist, p, cfg);
    f.reset(one_car_obs(car), belief);
    for (int t = 1; t <= 30; ++t) {
      car = free_step(theta, car, p, world);
      f.update({0.0, LatCommand::keep}, one_car_obs(car), belief);
      if (t == 5) err5.push_back(std::abs(f.mean_rank(1) - truth));
    }
    err30.push_back(std::abs(f.mean_rank(1) - truth));
  }
  CHECK(testutil::median(err30) < testutil::median(err5));
  CHECK(testutil::median(err30) < 0.15);
}

TEST_CASE("filter configuration is carried through") {
  SimParams p;
  FilterConfig cfg;
  cfg.variant = FilterVariant::aggressiveness;
  cfg.particles = 123;
  cfg.lane_mismatch = 0.01;
  InternalStateFilter f(BehaviorDistribution::scenario(2), p, cfg);
  CHECK(f.config().particles == 123);
  CHECK(f.config().lane_mismatch == 0.01);
  CHECK(FilterConfig{}.particles == 5000);
  CHECK(FilterConfig{}.lane_mismatch == 0.05);
}
