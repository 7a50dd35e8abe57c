#pragma once

#include <array>
#include <span>

#include "laneplan/rng.hpp"
#include "laneplan/types.hpp"

namespace laneplan {

// The eight sampled driver parameters, in fixed order. The IDM exponent is a
// configuration constant, not part of the latent state.
inline constexpr int kDriverParamCount = 8;

struct ParamRange {
  double timid = 0;
  double aggressive = 0;
  double lo = 0;  // physical lower bound (truncation)
  double hi = 0;  // physical upper bound

  double normal() const { return 0.5 * (timid + aggressive); }
};

struct ArchetypeTable {
  // Order: desired_speed, time_gap, jam_distance, max_accel, comfort_decel,
  //        politeness, safe_braking, accel_threshold.
  std::array<ParamRange, kDriverParamCount> ranges;

  static ArchetypeTable standard();
};

enum class CorrelationMode { independent, gaussian_copula, fully_correlated };

struct CopulaSpec {
  double rho = 0.75;
  CorrelationMode mode = CorrelationMode::gaussian_copula;

  // rho = 0 and rho = 1 degenerate to the cheap exact forms.
  static CopulaSpec from_rho(double rho);
};

struct BehaviorDistribution {
  ArchetypeTable table = ArchetypeTable::standard();
  CopulaSpec copula = CopulaSpec::from_rho(0.75);
  double expansion_factor = 1.0;
  double idm_exponent = 4.0;

  // Scenario 1: independent; scenario 2: fully correlated ("aggressiveness");
  // scenario 3: Gaussian copula with rho = 0.75.
  static BehaviorDistribution scenario(int which);
  static BehaviorDistribution with_rho(double rho);
};

// Uniform ranks with the given equicorrelation in the Gaussian latent space.
// Throws std::invalid_argument outside rho in [0,1].
void gaussian_copula_sample(double rho, std::span<double> out, Rng& rng);

// Ranks from the copula, mapped affinely per parameter onto the (possibly
// expanded) [timid, aggressive] range; rank 1 is the aggressive extreme of
// every parameter. Values falling outside physical bounds have their rank
// resampled inside the feasible sub-interval.
DriverParams sample_driver(const BehaviorDistribution& dist, Rng& rng);

// Deterministic single-rank map (the fully-correlated scenario's inverse
// image). Out-of-bound values are clamped.
DriverParams driver_from_rank(const BehaviorDistribution& dist, double rank);

// The exact Normal archetype under the distribution's exponent setting.
DriverParams normal_driver(const BehaviorDistribution& dist);

// Multiplies every half-range about the Normal midpoint by factor; physical
// truncation bounds are unchanged. Throws std::invalid_argument if factor <= 0.
BehaviorDistribution expand_domain(const BehaviorDistribution& dist, double factor);

// Mean of the per-parameter ranks, clamped to [0,1]; recovers the shared rank
// exactly for fully-correlated draws.
double aggressiveness_of(const DriverParams& params, const ArchetypeTable& table);

}  // namespace laneplan
