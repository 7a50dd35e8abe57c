#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "laneplan/highway.hpp"
#include "laneplan/pomdp.hpp"

namespace laneplan {

// Joint: particles are full eight-parameter drivers. Aggressiveness: scalar
// ranks mapped through the fully-correlated inverse image.
enum class FilterVariant { joint, aggressiveness };

struct FilterConfig {
  FilterVariant variant = FilterVariant::joint;
  int particles = 5000;          // 2000 for the aggressiveness variant
  double lane_mismatch = 0.05;   // weight factor for a wrong predicted lane
};

// Per-vehicle independent particle filter over latent driver parameters.
// Physics is observed exactly, so the posterior is the observation plus one
// particle set per live vehicle id. Each update resamples proportional to
// weights, propagates one step with sampled acceleration noise, and reweights
// with the triangular speed-residual likelihood times a lane-mismatch factor.
class InternalStateFilter {
 public:
  InternalStateFilter(const BehaviorDistribution& dist, const SimParams& p,
                      const FilterConfig& cfg);

  // Prior-initializes every vehicle in the observation.
  void reset(const Observation& o, Rng& rng);

  // One filtering step: `u` is the ego action that produced `o` from the
  // previous observation. Unknown ids get prior sets; departed ids drop.
  void update(const EgoAction& u, const Observation& o, Rng& rng);

  // One joint posterior draw (per-vehicle independent, proportional to
  // weights) assembled into a full state around the exact physics.
  SceneState sample_scene(Rng& rng) const;
  // Certainty-equivalent state: per-vehicle weighted posterior mean.
  SceneState mean_scene() const;

  DriverParams mean_params(std::uint32_t id) const;
  double mean_rank(std::uint32_t id) const;  // aggressiveness variant only
  const Observation& physics() const { return physics_; }
  const FilterConfig& config() const { return cfg_; }

 private:
  struct Particles {
    std::vector<DriverParams> theta;  // joint variant
    std::vector<double> rank;         // aggressiveness variant
    std::vector<double> weight;
  };

  Particles make_prior(Rng& rng) const;
  DriverParams particle_params(const Particles& ps, int m) const;

  BehaviorDistribution dist_;
  SimParams p_;
  FilterConfig cfg_;
  DriverParams normal_;
  Observation physics_;
  std::map<std::uint32_t, Particles> sets_;  // ordered: deterministic walks
};

}  // namespace laneplan
