#include <cmath>
#include <vector>

#include "doctest.h"
#include "laneplan/idm_mobil.hpp"
#include "stat_utils.hpp"

using namespace laneplan;

namespace {

IdmParams normal_idm() {
  IdmParams p;
  p.desired_speed = 33.3;
  p.time_gap = 1.5;
  p.jam_distance = 2.0;
  p.max_accel = 1.4;
  p.comfort_decel = 2.0;
  p.accel_exponent = 4.0;
  return p;
}

IdmParams aggressive_idm() {
  IdmParams p;
  p.desired_speed = 38.9;
  p.time_gap = 1.0;
  p.jam_distance = 0.0;
  p.max_accel = 2.0;
  p.comfort_decel = 3.0;
  p.accel_exponent = 4.0;
  return p;
}

}  // namespace

TEST_CASE("desired gap worked values") {
  LongitudinalContext ctx;
  ctx.has_leader = true;

  ctx.speed = 0.0;
  ctx.approach_rate = 0.0;
  CHECK(desired_gap(normal_idm(), ctx) == doctest::Approx(2.0).epsilon(1e-12));

  ctx.speed = 33.3;
  CHECK(desired_gap(normal_idm(), ctx) == doctest::Approx(51.95).epsilon(1e-12));

  ctx.speed = 20.0;
  CHECK(desired_gap(aggressive_idm(), ctx) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("desired gap floors at jam distance when opening fast") {
  LongitudinalContext ctx;
  ctx.has_leader = true;
  ctx.speed = 30.0;
  ctx.approach_rate = -20.0;  // leader pulling away
  CHECK(desired_gap(normal_idm(), ctx) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("desired gap monotone in speed and approach rate") {
  const IdmParams p = normal_idm();
  double prev = 0.0;
  for (int i = 0; i <= 40; ++i) {
    LongitudinalContext ctx;
    ctx.has_leader = true;
    ctx.speed = i;
    ctx.approach_rate = 1.0;
    const double g = desired_gap(p, ctx);
    CHECK(g >= prev);
    prev = g;
  }
  prev = desired_gap(p, {30.0, 0.0, 0.0, true});
  for (int i = 1; i <= 20; ++i) {
    const double g = desired_gap(p, {30.0, 0.0, 0.5 * i, true});
    CHECK(g >= prev);
    prev = g;
  }
}

TEST_CASE("idm acceleration worked values") {
  const IdmParams p = normal_idm();

  LongitudinalContext free_road;
  free_road.speed = p.desired_speed;
  free_road.has_leader = false;
  CHECK(idm_accel(p, free_road) == doctest::Approx(0.0).epsilon(1e-12));

  LongitudinalContext standstill;
  standstill.speed = 0.0;
  standstill.gap = p.jam_distance;
  standstill.approach_rate = 0.0;
  standstill.has_leader = true;
  CHECK(idm_accel(p, standstill) == doctest::Approx(0.0).epsilon(1e-12));

  LongitudinalContext equilibrium;
  equilibrium.speed = 33.3;
  equilibrium.gap = 51.95;
  equilibrium.approach_rate = 0.0;
  equilibrium.has_leader = true;
  CHECK(idm_accel(p, equilibrium) == doctest::Approx(-1.4).epsilon(1e-12));
}

TEST_CASE("idm acceleration never exceeds max accel") {
  const IdmParams p = normal_idm();
  for (int vi = 0; vi <= 40; vi += 5) {
    for (int gi = 1; gi <= 200; gi += 20) {
      for (int di = -10; di <= 10; di += 5) {
        LongitudinalContext ctx{double(vi), double(gi), double(di), true};
        CHECK(idm_accel(p, ctx) <= p.max_accel + 1e-12);
      }
    }
  }
}

TEST_CASE("acceleration noise: symmetric triangular, mean and shape") {
  IdmParams p = normal_idm();  // support [-0.7, 0.7]
  Rng rng(20240817);
  std::vector<double> w(100000);
  for (auto& x : w) x = sample_accel_noise(p, rng);

  CHECK(std::abs(testutil::mean(w)) < 0.01);
  const double ks = testutil::ks_statistic(
      w, [](double x) { return testutil::triangular_cdf(x, 0.7); });
  CHECK(ks < 0.01);
  for (double x : w) {
    CHECK(x >= -0.7);
    CHECK(x <= 0.7);
  }
}

TEST_CASE("acceleration noise: density near the mode matches the triangle") {
  IdmParams p = normal_idm();
  p.max_accel = 2.0;  // support [-1, 1], pdf(0) = 1
  Rng rng(77);
  const int n = 100000;
  int central = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(sample_accel_noise(p, rng)) <= 0.05) ++central;
  }
  const double expected =
      testutil::triangular_cdf(0.05, 1.0) - testutil::triangular_cdf(-0.05, 1.0);
  CHECK(std::abs(double(central) / n - expected) < 0.004);
  CHECK(double(central) / n / 0.1 == doctest::Approx(2.0 / p.max_accel).epsilon(0.05));
}

TEST_CASE("acceleration noise: binding upper constraint rescales that half only") {
  IdmParams p = normal_idm();
  NoiseConstraint c;
  c.max_up = 0.35;
  Rng rng(123);
  std::vector<double> up, down;
  for (int i = 0; i < 100000; ++i) {
    const double w = sample_accel_noise(p, rng, c);
    CHECK(w <= 0.35);
    CHECK(w >= -0.7);
    if (w > 0) up.push_back(w);
    if (w < 0) down.push_back(w);
  }
  // Each half keeps its probability mass.
  CHECK(double(up.size()) / 100000 == doctest::Approx(0.5).epsilon(0.02));
  // Untouched half still spans its full support.
  CHECK(*std::min_element(down.begin(), down.end()) < -0.65);
  // Rescaled half is itself triangular on [0, 0.35].
  const double ks = testutil::ks_statistic(up, [](double x) {
    const double t = 1.0 - x / 0.35;
    return 1.0 - t * t;
  });
  CHECK(ks < 0.015);
}

TEST_CASE("acceleration noise: fully blocked half collapses to zero") {
  IdmParams p = normal_idm();
  NoiseConstraint c;
  c.max_down = 0.0;
  Rng rng(5);
  int zeros = 0;
  for (int i = 0; i < 20000; ++i) {
    const double w = sample_accel_noise(p, rng, c);
    CHECK(w >= 0.0);
    if (w == 0.0) ++zeros;
  }
  CHECK(double(zeros) / 20000 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("mobil decision: safety and incentive") {
  DriverParams timid;
  timid.mobil = {1.0, 1.0, 0.2};
  DriverParams aggressive;
  aggressive.mobil = {0.0, 3.0, 0.0};
  DriverParams normal;
  normal.mobil = {0.5, 2.0, 0.1};

  SUBCASE("safety violation vetoes regardless of incentive") {
    NeighborhoodAccels cur{0.0, 0.0, 0.0};
    NeighborhoodAccels hyp{5.0, -normal.mobil.safe_braking - 0.1, 0.0};
    CHECK_FALSE(mobil_decision(normal, cur, hyp));
  }
  SUBCASE("politeness zero ignores follower losses") {
    NeighborhoodAccels cur{0.0, 0.0, 0.0};
    NeighborhoodAccels hyp{0.3, -2.9, -5.0};  // new follower within b_safe=3
    CHECK(mobil_decision(aggressive, cur, hyp));
  }
  SUBCASE("politeness one weighs followers fully") {
    NeighborhoodAccels cur{0.0, 0.0, 0.0};
    NeighborhoodAccels hyp{0.3, -0.3, -0.3};
    // 0.3 + 1*(-0.6) = -0.3 < 0.2
    CHECK_FALSE(mobil_decision(timid, cur, hyp));
  }
  SUBCASE("threshold comparison is strict") {
    DriverParams p = normal;
    p.mobil.politeness = 0.0;
    p.mobil.accel_threshold = 0.3;
    NeighborhoodAccels cur{0.0, 0.0, 0.0};
    NeighborhoodAccels hyp{0.3, 0.0, 0.0};
    CHECK_FALSE(mobil_decision(p, cur, hyp));
    hyp.candidate = 0.3 + 1e-9;
    CHECK(mobil_decision(p, cur, hyp));
  }
  SUBCASE("only differences enter the incentive") {
    NeighborhoodAccels cur{0.4, -0.2, 0.1};
    NeighborhoodAccels hyp{0.9, -0.1, -0.2};
    // Shifts stay above the -3.0 follower veto, which is not shift-invariant.
    for (double shift : {-2.5, 0.0, 2.5}) {
      NeighborhoodAccels cur_s{cur.candidate + shift, cur.new_follower + shift,
                               cur.old_follower + shift};
      NeighborhoodAccels hyp_s{hyp.candidate + shift, hyp.new_follower + shift,
                               hyp.old_follower + shift};
      // Keep the safety term satisfied so only the incentive varies.
      const bool base = mobil_decision(aggressive, cur, hyp);
      CHECK(mobil_decision(aggressive, cur_s, hyp_s) == base);
    }
  }
  SUBCASE("identical configurations never justify a change") {
    NeighborhoodAccels both{0.5, 0.2, -0.1};
    CHECK_FALSE(mobil_decision(normal, both, both));
    CHECK_FALSE(mobil_decision(timid, both, both));
  }
}
