#include "laneplan/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace laneplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPosEps = 1e-6;  // stand-in for strict positivity bounds

std::array<double, kDriverParamCount> unpack(const DriverParams& p) {
  return {p.idm.desired_speed, p.idm.time_gap,      p.idm.jam_distance,
          p.idm.max_accel,     p.idm.comfort_decel, p.mobil.politeness,
          p.mobil.safe_braking, p.mobil.accel_threshold};
}

DriverParams pack(const std::array<double, kDriverParamCount>& v,
                  double exponent) {
  DriverParams p;
  p.idm.desired_speed = v[0];
  p.idm.time_gap = v[1];
  p.idm.jam_distance = v[2];
  p.idm.max_accel = v[3];
  p.idm.comfort_decel = v[4];
  p.idm.accel_exponent = exponent;
  p.mobil.politeness = v[5];
  p.mobil.safe_braking = v[6];
  p.mobil.accel_threshold = v[7];
  return p;
}

struct EndPoints {
  double timid;
  double aggressive;
};

EndPoints expanded_ends(const ParamRange& r, double factor) {
  const double mid = r.normal();
  return {mid + factor * (r.timid - mid), mid + factor * (r.aggressive - mid)};
}

double value_at_rank(const EndPoints& e, double rank) {
  return e.timid + rank * (e.aggressive - e.timid);
}

}  // namespace

ArchetypeTable ArchetypeTable::standard() {
  ArchetypeTable t;
  //            timid  aggressive  lo       hi
  t.ranges[0] = {27.8, 38.9,       kPosEps, kInf};  // desired_speed
  t.ranges[1] = {2.0,  1.0,        0.0,     kInf};  // time_gap
  t.ranges[2] = {4.0,  0.0,        0.0,     kInf};  // jam_distance
  t.ranges[3] = {0.8,  2.0,        kPosEps, kInf};  // max_accel
  t.ranges[4] = {1.0,  3.0,        kPosEps, kInf};  // comfort_decel
  t.ranges[5] = {1.0,  0.0,        0.0,     1.0};   // politeness
  t.ranges[6] = {1.0,  3.0,        kPosEps, kInf};  // safe_braking
  t.ranges[7] = {0.2,  0.0,        0.0,     kInf};  // accel_threshold
  return t;
}

CopulaSpec CopulaSpec::from_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("correlation must lie in [0,1]");
  }
  CopulaSpec c;
  c.rho = rho;
  if (rho == 0.0) {
    c.mode = CorrelationMode::independent;
  } else if (rho == 1.0) {
    c.mode = CorrelationMode::fully_correlated;
  } else {
    c.mode = CorrelationMode::gaussian_copula;
  }
  return c;
}

BehaviorDistribution BehaviorDistribution::scenario(int which) {
  switch (which) {
    case 1: return with_rho(0.0);
    case 2: return with_rho(1.0);
    case 3: return with_rho(0.75);
    default: throw std::invalid_argument("scenario must be 1, 2 or 3");
  }
}

BehaviorDistribution BehaviorDistribution::with_rho(double rho) {
  BehaviorDistribution d;
  d.copula = CopulaSpec::from_rho(rho);
  return d;
}

void gaussian_copula_sample(double rho, std::span<double> out, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("correlation must lie in [0,1]");
  }
  if (rho == 0.0) {
    for (double& u : out) u = draw_unit(rng);
    return;
  }
  if (rho == 1.0) {
    const double u = std_normal_cdf(draw_normal(rng));
    for (double& v : out) v = u;
    return;
  }
  const double shared = draw_normal(rng);
  const double w_shared = std::sqrt(rho);
  const double w_own = std::sqrt(1.0 - rho);
  for (double& u : out) {
    u = std_normal_cdf(w_shared * shared + w_own * draw_normal(rng));
  }
}

DriverParams sample_driver(const BehaviorDistribution& dist, Rng& rng) {
  std::array<double, kDriverParamCount> ranks;
  gaussian_copula_sample(dist.copula.rho, ranks, rng);

  std::array<double, kDriverParamCount> values;
  for (int i = 0; i < kDriverParamCount; ++i) {
    const ParamRange& r = dist.table.ranges[i];
    const EndPoints e = expanded_ends(r, dist.expansion_factor);
    double v = value_at_rank(e, ranks[i]);
    if (v < r.lo || v > r.hi) {
      // Resample this coordinate's rank inside the feasible sub-interval;
      // a uniform rank restricted this way keeps the marginal uniform on the
      // truncated value range.
      const double span = e.aggressive - e.timid;
      double r_lo = (r.lo - e.timid) / span;
      double r_hi = (r.hi - e.timid) / span;
      if (r_lo > r_hi) std::swap(r_lo, r_hi);
      r_lo = std::max(r_lo, 0.0);
      r_hi = std::min(r_hi, 1.0);
      const double rank2 = r_lo + draw_unit(rng) * (r_hi - r_lo);
      v = std::clamp(value_at_rank(e, rank2), r.lo, r.hi);
    }
    values[i] = v;
  }
  return pack(values, dist.idm_exponent);
}

DriverParams driver_from_rank(const BehaviorDistribution& dist, double rank) {
  std::array<double, kDriverParamCount> values;
  for (int i = 0; i < kDriverParamCount; ++i) {
    const ParamRange& r = dist.table.ranges[i];
    const EndPoints e = expanded_ends(r, dist.expansion_factor);
    values[i] = std::clamp(value_at_rank(e, rank), r.lo, r.hi);
  }
  return pack(values, dist.idm_exponent);
}

DriverParams normal_driver(const BehaviorDistribution& dist) {
  std::array<double, kDriverParamCount> values;
  for (int i = 0; i < kDriverParamCount; ++i) {
    values[i] = dist.table.ranges[i].normal();
  }
  return pack(values, dist.idm_exponent);
}

BehaviorDistribution expand_domain(const BehaviorDistribution& dist,
                                   double factor) {
  if (!(factor > 0.0)) {
    throw std::invalid_argument("expansion factor must be positive");
  }
  BehaviorDistribution out = dist;
  out.expansion_factor = dist.expansion_factor * factor;
  return out;
}

double aggressiveness_of(const DriverParams& params,
                         const ArchetypeTable& table) {
  const auto values = unpack(params);
  double sum = 0;
  for (int i = 0; i < kDriverParamCount; ++i) {
    const ParamRange& r = table.ranges[i];
    sum += (values[i] - r.timid) / (r.aggressive - r.timid);
  }
  return std::clamp(sum / kDriverParamCount, 0.0, 1.0);
}

}  // namespace laneplan
