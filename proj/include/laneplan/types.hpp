#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>

namespace laneplan {

// Fixed-capacity inline vector. Scene states are copied throughout the search
// tree millions of times per episode; keeping them flat and trivially
// copyable is what makes single-core sweeps affordable.
template <typename T, std::size_t Cap>
class FixedVec {
 public:
  using value_type = T;

  T& operator[](std::size_t i) { return items_[i]; }
  const T& operator[](std::size_t i) const { return items_[i]; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  static constexpr std::size_t capacity() { return Cap; }

  T* begin() { return items_; }
  T* end() { return items_ + size_; }
  const T* begin() const { return items_; }
  const T* end() const { return items_ + size_; }
  T& back() { return items_[size_ - 1]; }

  void push_back(const T& v) {
    assert(size_ < Cap);
    items_[size_++] = v;
  }
  // Order-preserving erase; iteration order is part of determinism.
  void erase_at(std::size_t i) {
    assert(i < size_);
    for (std::size_t k = i + 1; k < size_; ++k) items_[k - 1] = items_[k];
    --size_;
  }
  void clear() { size_ = 0; }

 private:
  T items_[Cap];
  std::size_t size_ = 0;
};

struct IdmParams {
  double desired_speed = 33.35;  // xdot0, m/s
  double time_gap = 1.5;         // T, s
  double jam_distance = 2.0;     // g0, m
  double max_accel = 1.4;        // a-bar, m/s^2
  double comfort_decel = 2.0;    // b, m/s^2
  double accel_exponent = 4.0;   // delta
};

struct MobilParams {
  double politeness = 0.5;        // p, in [0,1]
  double safe_braking = 2.0;      // b_safe, m/s^2
  double accel_threshold = 0.1;   // delta-a threshold, m/s^2
};

// The latent per-driver internal state: eight sampled parameters (the IDM
// exponent is a fixed configuration constant).
struct DriverParams {
  IdmParams idm;
  MobilParams mobil;
};

struct PhysicalState {
  double x = 0;   // m, longitudinal position
  double y = 0;   // lane units; lane centers at integers, 0 = rightmost
  double vx = 0;  // m/s
  double vy = 0;  // lanes/s; nonzero while a lane change is in progress
};

struct Vehicle {
  PhysicalState phys;
  DriverParams behavior;
  std::uint32_t id = 0;
};

constexpr std::size_t kMaxVehicles = 16;

struct SceneState {
  PhysicalState ego;
  FixedVec<Vehicle, kMaxVehicles> cars;  // surrounding traffic, spawn order
  double odometer = 0;                   // ego distance since episode start, m
  std::uint32_t next_id = 1;             // id allocator, part of the state so
                                         // simulated rollouts stay collision-free
};

struct SimParams {
  double dt = 0.75;              // s per step
  int max_vehicles = 10;         // N_max, surrounding cars
  double lane_change_rate = 0.67;  // lanes/s while changing
  double distance_limit = 1000;  // m, episode length L
  double vel_noise_std = 0.5;    // m/s, spawn speed spread around desired
  double brake_limit = 8.0;      // b_max, physical braking bound
  double hard_brake = 4.0;       // b_hard, unsafe-event threshold
  double slow_speed = 15.0;      // m/s, unsafe-event threshold
  int lanes = 4;
  double vehicle_length = 4.0;   // m, bumper-to-bumper gap convention
  double nominal_brake = 2.0;    // b_nominal for the dynamic brake action
  double accel_step = 1.0;       // a_inc in the ego action grid
  double idm_exponent = 4.0;     // delta fed into sampled IdmParams
  int max_steps = 1000;          // hard cap so stalled episodes terminate

  double target_lane() const { return lanes - 1; }
  double window() const { return 50.0; }  // rolling section half-length, m
};

enum class LatCommand { keep = 0, begin_left = 1, begin_right = 2 };

struct EgoAction {
  double accel = 0;                     // m/s^2
  LatCommand lat = LatCommand::keep;
};

inline bool operator==(const EgoAction& a, const EgoAction& b) {
  return a.accel == b.accel && a.lat == b.lat;
}

struct VehicleObs {
  std::uint32_t id = 0;
  PhysicalState phys;
};

// Physical states are observed exactly; behavior parameters are not.
struct Observation {
  PhysicalState ego;
  double odometer = 0;
  FixedVec<VehicleObs, kMaxVehicles> cars;
};

struct RewardWeights {
  double lambda = 1.0;  // cost multiplier on unsafe events
};

}  // namespace laneplan
