#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laneplan/policies.hpp"

namespace laneplan {

struct EpisodeResult {
  bool success = false;
  bool unsafe = false;       // any hard-brake or too-slow event, ego included
  int hard_brake_count = 0;  // all vehicles over the whole episode
  double distance_m = 0;
  int steps = 0;
  std::uint64_t seed = 0;
};

// One episode's full wiring: the world draws drivers from `world`, the policy
// plans against `deps.model`. They differ only in the robustness studies.
struct EpisodeSetup {
  SimParams params;
  BehaviorDistribution world;
  PolicyKind kind = PolicyKind::pomcpow;
  PolicyDeps deps;
};

EpisodeResult run_episode(const EpisodeSetup& setup, std::uint64_t seed);

// Ego rows carry the action, reward and event flags; car rows the physics.
struct TraceRow {
  int step = 0;
  bool is_ego = false;
  std::uint32_t id = 0;
  PhysicalState phys;
  double action_accel = 0;
  int action_lat = 0;
  double reward = 0;
  bool hard_brake = false;
  bool too_slow = false;
};

EpisodeResult run_episode_traced(const EpisodeSetup& setup, std::uint64_t seed,
                                 std::vector<TraceRow>* trace);

struct MetricsSummary {
  int n = 0;
  double success_rate = 0;
  double unsafe_rate = 0;
  double safe_and_successful = 0;
  double hard_brakes_per_km = 0;
  double sem_success = 0;
  double sem_unsafe = 0;
  double hoeffding_eps = 0;  // 68% confidence
  double wall_time_s = 0;
};

MetricsSummary summarize(const std::vector<EpisodeResult>& episodes);

// eps = sqrt(ln(2 / (1 - confidence)) / (2n)). Throws std::invalid_argument
// for n < 1 or confidence outside (0, 1).
double hoeffding_interval(int n, double confidence);

struct SweepCell {
  std::string label;  // planner name, possibly annotated with its model
  double knob = 0;    // lambda, rho, or factor depending on the sweep
  EpisodeSetup setup;
};

struct SweepPlan {
  std::string knob_name;  // CSV column header for the knob
  std::vector<SweepCell> cells;
};

struct SweepResult {
  std::string knob_name;
  std::vector<SweepCell> cells;
  std::vector<MetricsSummary> summaries;
};

// Episode seeds are base_seed + cell_index * episodes + episode_index, so any
// cell is reproducible in isolation. Episodes within a cell may run on a
// small worker pool; results are written by episode index, so the outcome is
// identical at any worker count.
SweepResult run_sweep(const SweepPlan& plan, std::uint64_t base_seed,
                      int episodes_per_cell);

// The four studies. Lists and scales come from the caller; each study fills
// in its own world/model pairing per cell.
struct StudyParams {
  SimParams params;
  PlannerParams planner;
  RewardWeights weights;          // lambda for the non-Pareto studies
  BehaviorDistribution base;      // nominal driver distribution
  std::vector<double> lambdas{0.5, 1, 2, 4, 8};
  std::vector<double> rhos{0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> factors{0.2, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> plan_rhos{0, 1};
  std::vector<PolicyKind> planners;  // per-study default when empty
  int episodes = 300;
  std::uint64_t seed = 1;
  int joint_particles = 5000;
  int rank_particles = 2000;
  double lane_mismatch = 0.05;
};

SweepResult pareto_sweep(const StudyParams& sp);
SweepResult correlation_sweep(const StudyParams& sp);
// Planner keeps a fixed-rho model while the world's rho varies.
SweepResult robustness_correlation(const StudyParams& sp);
// Planner keeps the nominal distribution while the world's parameter ranges
// are expanded or shrunk about the normal driver.
SweepResult robustness_domain(const StudyParams& sp);

std::string sweep_csv(const SweepResult& r);
// One (x, y, y_err) file per cell label: x is the knob (for the Pareto sweep,
// the unsafe rate), y the headline rate, y_err the Hoeffding half-width.
void write_plot_series(const SweepResult& r, const std::string& dir,
                       const std::string& stem);

void write_text_file(const std::string& path, const std::string& content);

// Equation spot checks with pinned expected values; empty string on pass.
std::string equation_suite();
// Random pruned-action episodes across all three scenarios asserting the
// never-empty action set, crash-freedom, and window/limit invariants.
std::string crash_fuzz(const SimParams& p, int episodes, std::uint64_t seed);

}  // namespace laneplan
