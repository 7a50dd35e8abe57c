#include "laneplan/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "laneplan/idm_mobil.hpp"
#include "laneplan/pomdp.hpp"

namespace laneplan {
namespace {

constexpr std::uint64_t kWorldSalt = 1;
constexpr std::uint64_t kPlannerSalt = 2;
constexpr std::uint64_t kFilterSalt = 3;

EpisodeResult run_episode_impl(const EpisodeSetup& setup, std::uint64_t seed,
                               std::vector<TraceRow>* trace) {
  const SimParams& p = setup.params;
  HighwaySim world(p, setup.world);
  Rng wrng(mix_seed(seed, kWorldSalt));
  Rng prng(mix_seed(seed, kPlannerSalt));
  Rng frng(mix_seed(seed, kFilterSalt));

  auto policy = make_policy(setup.kind, setup.deps);
  SceneState s = world.initial_scene(wrng);
  policy->begin_episode(observe(s), frng);

  EpisodeResult r;
  r.seed = seed;
  if (trace) {
    TraceRow row;
    row.step = 0;
    row.is_ego = true;
    row.phys = s.ego;
    trace->push_back(row);
    for (const Vehicle& v : s.cars) {
      TraceRow cr;
      cr.step = 0;
      cr.id = v.id;
      cr.phys = v.phys;
      trace->push_back(cr);
    }
  }

  for (int step = 1; step <= p.max_steps; ++step) {
    const EgoAction a = policy->decide(s, prng);
    StepEvents ev;
    const SceneState next = world.step(s, a, wrng, &ev);
    r.steps = step;
    r.hard_brake_count += ev.hard_brake_count;
    if (ev.other_hard_brake || ev.other_too_slow || ev.ego_hard_brake ||
        ev.ego_too_slow) {
      r.unsafe = true;
    }
    if (trace) {
      TraceRow row;
      row.step = step;
      row.is_ego = true;
      row.phys = next.ego;
      row.action_accel = a.accel;
      row.action_lat = static_cast<int>(a.lat);
      row.reward = reward(s, next, setup.deps.weights, p);
      row.hard_brake = ev.ego_hard_brake;
      row.too_slow = ev.ego_too_slow;
      trace->push_back(row);
      for (const Vehicle& v : next.cars) {
        TraceRow cr;
        cr.step = step;
        cr.id = v.id;
        cr.phys = v.phys;
        for (const Vehicle& b : s.cars) {
          if (b.id == v.id) {
            cr.hard_brake = v.phys.vx - b.phys.vx < -p.hard_brake * p.dt;
            break;
          }
        }
        cr.too_slow = v.phys.vx < p.slow_speed;
        trace->push_back(cr);
      }
    }
    policy->after_step(a, observe(next), frng);
    s = next;

    const EpisodeStatus st = episode_status(s, p);
    if (st == EpisodeStatus::success) {
      r.success = true;
      break;
    }
    if (st == EpisodeStatus::distance_exceeded) break;
    // Reaching the target on the same step the odometer overshoots the limit
    // leaves the status ongoing forever; it counts as a failure.
    if (s.odometer > p.distance_limit) break;
  }
  r.distance_m = s.odometer;
  return r;
}

unsigned worker_count(int jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("LANEPLAN_THREADS")) {
    const int v = std::atoi(env);
    hw = v > 0 ? static_cast<unsigned>(v) : 1;
  }
  if (hw == 0) hw = 1;
  return std::min<unsigned>(hw, static_cast<unsigned>(std::max(jobs, 1)));
}

std::vector<EpisodeResult> run_cell(const EpisodeSetup& setup,
                                    std::uint64_t first_seed, int n) {
  std::vector<EpisodeResult> out(n);
  const unsigned workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) out[i] = run_episode(setup, first_seed + i);
    return out;
  }
  std::atomic<int> cursor{0};
  auto work = [&]() {
    for (int i; (i = cursor.fetch_add(1)) < n;) {
      out[i] = run_episode(setup, first_seed + i);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  return out;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  }
  return out;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

EpisodeResult run_episode(const EpisodeSetup& setup, std::uint64_t seed) {
  return run_episode_impl(setup, seed, nullptr);
}

EpisodeResult run_episode_traced(const EpisodeSetup& setup, std::uint64_t seed,
                                 std::vector<TraceRow>* trace) {
  return run_episode_impl(setup, seed, trace);
}

MetricsSummary summarize(const std::vector<EpisodeResult>& episodes) {
  MetricsSummary m;
  m.n = static_cast<int>(episodes.size());
  if (m.n == 0) return m;
  int succ = 0, unsafe = 0, both = 0, brakes = 0;
  double meters = 0;
  for (const EpisodeResult& e : episodes) {
    succ += e.success;
    unsafe += e.unsafe;
    both += e.success && !e.unsafe;
    brakes += e.hard_brake_count;
    meters += e.distance_m;
  }
  m.success_rate = double(succ) / m.n;
  m.unsafe_rate = double(unsafe) / m.n;
  m.safe_and_successful = double(both) / m.n;
  m.hard_brakes_per_km = meters > 0 ? brakes / (meters / 1000.0) : 0.0;
  m.sem_success = std::sqrt(m.success_rate * (1 - m.success_rate) / m.n);
  m.sem_unsafe = std::sqrt(m.unsafe_rate * (1 - m.unsafe_rate) / m.n);
  m.hoeffding_eps = hoeffding_interval(m.n, 0.68);
  return m;
}

double hoeffding_interval(int n, double confidence) {
  if (n < 1) throw std::invalid_argument("hoeffding_interval: n must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument(
        "hoeffding_interval: confidence must be inside (0, 1)");
  }
  return std::sqrt(std::log(2.0 / (1.0 - confidence)) / (2.0 * n));
}

SweepResult run_sweep(const SweepPlan& plan, std::uint64_t base_seed,
                      int episodes_per_cell) {
  if (episodes_per_cell < 1) {
    throw std::invalid_argument("run_sweep: episodes_per_cell must be >= 1");
  }
  SweepResult r;
  r.knob_name = plan.knob_name;
  r.cells = plan.cells;
  r.summaries.reserve(plan.cells.size());
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t first =
        base_seed + static_cast<std::uint64_t>(c) * episodes_per_cell;
    MetricsSummary m =
        summarize(run_cell(plan.cells[c].setup, first, episodes_per_cell));
    const auto t1 = std::chrono::steady_clock::now();
    m.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    r.summaries.push_back(m);
  }
  return r;
}

namespace {

std::vector<PolicyKind> planners_or(const StudyParams& sp,
                                    std::initializer_list<PolicyKind> def) {
  if (!sp.planners.empty()) return sp.planners;
  return std::vector<PolicyKind>(def);
}

BehaviorDistribution at_rho(const BehaviorDistribution& base, double rho) {
  BehaviorDistribution d = base;
  d.copula = CopulaSpec::from_rho(rho);
  return d;
}

PolicyDeps deps_for(const StudyParams& sp, const BehaviorDistribution& model,
                    double lambda) {
  PolicyDeps d;
  d.params = sp.params;
  d.model = model;
  d.weights.lambda = lambda;
  d.planner = sp.planner;
  d.joint_particles = sp.joint_particles;
  d.rank_particles = sp.rank_particles;
  d.lane_mismatch = sp.lane_mismatch;
  return d;
}

constexpr std::initializer_list<PolicyKind> kAllPlanners = {
    PolicyKind::assume_normal, PolicyKind::naive_mdp,
    PolicyKind::mean_state_mdp, PolicyKind::qmdp,
    PolicyKind::pomcpow, PolicyKind::omniscient,
};

}  // namespace

SweepResult pareto_sweep(const StudyParams& sp) {
  SweepPlan plan;
  plan.knob_name = "lambda";
  for (PolicyKind k : planners_or(sp, kAllPlanners)) {
    for (double lam : sp.lambdas) {
      plan.cells.push_back(
          {policy_name(k), lam, {sp.params, sp.base, k, deps_for(sp, sp.base, lam)}});
    }
  }
  return run_sweep(plan, sp.seed, sp.episodes);
}

SweepResult correlation_sweep(const StudyParams& sp) {
  SweepPlan plan;
  plan.knob_name = "rho";
  const auto kinds = planners_or(
      sp, {PolicyKind::mean_state_mdp, PolicyKind::qmdp, PolicyKind::pomcpow,
           PolicyKind::omniscient});
  for (PolicyKind k : kinds) {
    for (double rho : sp.rhos) {
      const BehaviorDistribution d = at_rho(sp.base, rho);
      plan.cells.push_back(
          {policy_name(k), rho, {sp.params, d, k, deps_for(sp, d, sp.weights.lambda)}});
    }
  }
  return run_sweep(plan, sp.seed, sp.episodes);
}

SweepResult robustness_correlation(const StudyParams& sp) {
  SweepPlan plan;
  plan.knob_name = "rho";
  for (PolicyKind k : planners_or(sp, {PolicyKind::pomcpow})) {
    for (double plan_rho : sp.plan_rhos) {
      const BehaviorDistribution model = at_rho(sp.base, plan_rho);
      const std::string label = std::string(policy_name(k)) + "|plan-rho=" +
                                fmt("%.6g", plan_rho);
      for (double sim_rho : sp.rhos) {
        plan.cells.push_back({label,
                              sim_rho,
                              {sp.params, at_rho(sp.base, sim_rho), k,
                               deps_for(sp, model, sp.weights.lambda)}});
      }
    }
  }
  return run_sweep(plan, sp.seed, sp.episodes);
}

SweepResult robustness_domain(const StudyParams& sp) {
  SweepPlan plan;
  plan.knob_name = "factor";
  for (PolicyKind k : planners_or(sp, kAllPlanners)) {
    for (double f : sp.factors) {
      plan.cells.push_back({policy_name(k),
                            f,
                            {sp.params, expand_domain(sp.base, f), k,
                             deps_for(sp, sp.base, sp.weights.lambda)}});
    }
  }
  return run_sweep(plan, sp.seed, sp.episodes);
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = "planner," + r.knob_name +
                    ",n,success_rate,unsafe_rate,safe_and_successful,"
                    "hard_brakes_per_km,sem_success,hoeffding_eps,wall_time_s\n";
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const MetricsSummary& m = r.summaries[i];
    out += r.cells[i].label;
    out += ',' + fmt("%.6g", r.cells[i].knob);
    out += ',' + std::to_string(m.n);
    out += ',' + fmt("%.6f", m.success_rate);
    out += ',' + fmt("%.6f", m.unsafe_rate);
    out += ',' + fmt("%.6f", m.safe_and_successful);
    out += ',' + fmt("%.6f", m.hard_brakes_per_km);
    out += ',' + fmt("%.6f", m.sem_success);
    out += ',' + fmt("%.6f", m.hoeffding_eps);
    out += ',' + fmt("%.3f", m.wall_time_s);
    out += '\n';
  }
  return out;
}

void write_plot_series(const SweepResult& r, const std::string& dir,
                       const std::string& stem) {
  std::vector<std::string> labels;
  for (const SweepCell& c : r.cells) {
    if (std::find(labels.begin(), labels.end(), c.label) == labels.end()) {
      labels.push_back(c.label);
    }
  }
  const bool pareto = r.knob_name == "lambda";
  for (const std::string& label : labels) {
    std::string body = "# x y yerr\n";
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      if (r.cells[i].label != label) continue;
      const MetricsSummary& m = r.summaries[i];
      const double x = pareto ? m.unsafe_rate : r.cells[i].knob;
      const double y = pareto ? m.success_rate : m.safe_and_successful;
      body += fmt("%.6f", x) + ' ' + fmt("%.6f", y) + ' ' +
              fmt("%.6f", m.hoeffding_eps) + '\n';
    }
    write_text_file(dir + "/" + stem + "_" + sanitize(label) + ".dat", body);
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

std::string equation_suite() {
  IdmParams normal;
  normal.desired_speed = 33.3;
  normal.time_gap = 1.5;
  normal.jam_distance = 2.0;
  normal.max_accel = 1.4;
  normal.comfort_decel = 2.0;
  IdmParams aggressive;
  aggressive.desired_speed = 38.9;
  aggressive.time_gap = 1.0;
  aggressive.jam_distance = 0.0;
  aggressive.max_accel = 2.0;
  aggressive.comfort_decel = 3.0;

  LongitudinalContext ctx{0.0, 0.0, 0.0, true};
  if (!near(desired_gap(normal, ctx), 2.0, 1e-9)) {
    return "equation suite: desired_gap at standstill != jam distance";
  }
  ctx.speed = 33.3;
  if (!near(desired_gap(normal, ctx), 51.95, 1e-9)) {
    return "equation suite: desired_gap(33.3 m/s) != 51.95";
  }
  if (!near(desired_gap(aggressive, {20.0, 0.0, 0.0, true}), 20.0, 1e-9)) {
    return "equation suite: desired_gap aggressive(20 m/s) != 20";
  }
  if (!near(idm_accel(normal, {33.3, 0.0, 0.0, false}), 0.0, 1e-9)) {
    return "equation suite: free-road IDM at desired speed != 0";
  }
  if (!near(idm_accel(normal, {0.0, 2.0, 0.0, true}), 0.0, 1e-9)) {
    return "equation suite: standstill IDM at jam gap != 0";
  }
  if (!near(idm_accel(normal, {33.3, 51.95, 0.0, true}), -1.4, 1e-9)) {
    return "equation suite: equilibrium IDM != -max_accel";
  }

  DriverParams d;
  d.mobil = {0.5, 2.0, 0.1};
  if (mobil_decision(d, {0, 0, 0}, {5.0, -2.1, 0.0})) {
    return "equation suite: MOBIL safety veto failed";
  }
  d.mobil = {0.0, 3.0, 0.0};
  if (!mobil_decision(d, {0, 0, 0}, {0.3, -2.9, -5.0})) {
    return "equation suite: MOBIL zero-politeness incentive failed";
  }
  d.mobil = {1.0, 1.0, 0.2};
  if (mobil_decision(d, {0, 0, 0}, {0.3, -0.3, -0.3})) {
    return "equation suite: MOBIL full-politeness weighting failed";
  }

  SimParams p;
  RewardWeights w;
  SceneState goal;
  goal.ego.y = p.target_lane();
  goal.ego.vx = 30;
  goal.odometer = 600;
  if (!near(reward(goal, goal, w, p), 1.0, 1e-9)) {
    return "equation suite: goal reward != 1";
  }
  SceneState before;
  before.ego.vx = 30;
  Vehicle braker;
  braker.id = 1;
  braker.phys.vx = 30;
  Vehicle slow;
  slow.id = 2;
  slow.phys.vx = 15.4;
  before.cars.push_back(braker);
  before.cars.push_back(slow);
  SceneState after = before;
  after.cars[0].phys.vx = 30 - p.hard_brake * p.dt - 0.001;
  after.cars[1].phys.vx = 14.0;
  if (!near(reward(before, after, w, p), -2.0, 1e-9)) {
    return "equation suite: hard-brake + slow reward != -2";
  }
  if (!near(reward(before, before, w, p), 0.0, 1e-9)) {
    return "equation suite: eventless off-goal reward != 0";
  }

  if (!near(hoeffding_interval(5000, 0.68), 0.013537, 1e-6)) {
    return "equation suite: hoeffding(5000, 0.68) off";
  }
  if (!near(hoeffding_interval(1250, 0.68) / hoeffding_interval(5000, 0.68),
            2.0, 1e-12)) {
    return "equation suite: hoeffding 1/sqrt(n) scaling off";
  }
  return "";
}

std::string crash_fuzz(const SimParams& p, int episodes, std::uint64_t seed) {
  for (int ep = 0; ep < episodes; ++ep) {
    const BehaviorDistribution dist = BehaviorDistribution::scenario(1 + ep % 3);
    HighwaySim sim(p, dist);
    Rng rng(mix_seed(seed + ep, 7));
    try {
      SceneState s = sim.initial_scene(rng);
      for (int step = 0; step < p.max_steps; ++step) {
        const ActionSet set =
            available_actions(s, p, sim.follower_accel_bound());
        if (set.items.empty()) {
          return "fuzz: empty action set at episode " + std::to_string(ep);
        }
        const EgoAction a = set.items[draw_index(rng, set.items.size())];
        s = sim.step(s, a, rng);

        for (std::size_t i = 0; i < s.cars.size(); ++i) {
          const PhysicalState& ci = s.cars[i].phys;
          if (std::abs(ci.x - s.ego.x) > p.window() + 1e-6) {
            return "fuzz: vehicle outside window at episode " +
                   std::to_string(ep);
          }
          if (ci.y < -1e-9 || ci.y > p.lanes - 1 + 1e-9 || ci.vx < 0) {
            return "fuzz: vehicle state out of range at episode " +
                   std::to_string(ep);
          }
          for (std::size_t j = 0; j < s.cars.size() + 1; ++j) {
            if (j == i + 1) continue;
            const PhysicalState& cj =
                j == 0 ? s.ego : s.cars[j - 1].phys;
            const LaneSpan si = occupied_lanes(ci, p.lanes);
            const LaneSpan sj = occupied_lanes(cj, p.lanes);
            if (si.lo <= sj.hi && sj.lo <= si.hi &&
                std::abs(ci.x - cj.x) - p.vehicle_length <= 0.0) {
              return "fuzz: same-lane overlap at episode " +
                     std::to_string(ep);
            }
          }
        }
        if (static_cast<int>(s.cars.size()) > p.max_vehicles) {
          return "fuzz: vehicle count above limit at episode " +
                 std::to_string(ep);
        }
        if (episode_status(s, p) != EpisodeStatus::ongoing ||
            s.odometer > p.distance_limit) {
          break;
        }
      }
    } catch (const std::exception& e) {
      return std::string("fuzz: exception at episode ") + std::to_string(ep) +
             ": " + e.what();
    }
  }
  return "";
}

}  // namespace laneplan
