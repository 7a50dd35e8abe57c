#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "laneplan/rng.hpp"

namespace laneplan {

// Leaf evaluation policy for the scene planners. seek_target heads for the
// target lane whenever the pruned action set allows it; keep_lane never
// steers. The goal reward is sparse (nothing until the target lane is
// reached), so keep_lane leaves every leaf at zero and the search would need
// to stumble through three unrewarded lane changes on its own; seek_target
// carries the goal signal into every leaf estimate.
enum class RolloutKind { seek_target, keep_lane };

struct PlannerParams {
  double ucb_c = 8.0;
  double dpw_k = 4.5;
  double dpw_alpha = 0.1;
  int depth = 40;
  int iterations = 1000;
  // Strictly below 1 so that reaching the goal sooner beats reaching it
  // later: at 1.0 every plan that eventually gets there ties and the ego
  // procrastinates indefinitely.
  double gamma = 0.95;
  RolloutKind rollout = RolloutKind::seek_target;
};

// Uniform index draw for picking among recorded transitions.
inline std::size_t draw_index(Rng& rng, std::size_t size) {
  const auto i = static_cast<std::size_t>(draw_unit(rng) * size);
  return i < size ? i : size - 1;
}

// Monte Carlo tree search with double progressive widening on both the action
// set and the sampled next states. The Model provides:
//   State, Action; actions(State) -> iterable of Action;
//   terminal(State) -> bool; step(State, Action, Rng&) -> {State, double};
//   rollout_action(State) -> Action.
// Visit counts start at 1 per node and both node and action counts are
// incremented at the end of a simulation, so sum_a N_a = N_v - 1. Action
// values initialize to 0 and the first backup replaces rather than averages.
template <typename Model>
class MctsDpw {
 public:
  using State = typename Model::State;
  using Action = typename Model::Action;

  MctsDpw(const Model& model, const PlannerParams& params)
      : model_(model), p_(params) {}

  // Plan from a fixed root state.
  Action plan(const State& s0, Rng& rng) {
    return plan_sampled([&s0](Rng&) -> const State& { return s0; }, rng);
  }

  // Root-sampling variant: `src` draws the root state anew each iteration
  // (all draws must share the same available action set). Q estimates at the
  // root average over the draws, which realizes the Q_MDP expectation.
  template <typename Src>
  Action plan_sampled(Src&& src, Rng& rng) {
    nodes_.clear();
    nodes_.emplace_back();
    {
      const State& s0 = src(rng);
      nodes_[0].state = s0;
      for (const Action& a : model_.actions(s0)) {
        nodes_[0].untried.push_back(a);
      }
    }
    assert(!nodes_[0].untried.empty());
    if (nodes_[0].untried.size() == 1) return nodes_[0].untried[0];
    for (int i = 0; i < p_.iterations; ++i) {
      if (i > 0) nodes_[0].state = src(rng);
      simulate(0, p_.depth, rng);
    }
    const Node& root = nodes_[0];
    int best = 0;
    for (int k = 1; k < static_cast<int>(root.edges.size()); ++k) {
      if (root.edges[k].q > root.edges[best].q) best = k;  // ties: lowest index
    }
    return root.edges[best].action;
  }

  double root_q(const Action& a) const {
    for (const Edge& e : nodes_[0].edges) {
      if (e.action == a) return e.q;
    }
    return 0.0;
  }
  int root_visits(const Action& a) const {
    for (const Edge& e : nodes_[0].edges) {
      if (e.action == a) return e.n;
    }
    return 0;
  }
  // Worst violation of the children-per-node cap seen in the last run;
  // nonpositive means the invariant held everywhere.
  double worst_cap_slack() const { return worst_cap_slack_; }

 private:
  struct Transition {
    int child;
    double reward;
  };
  struct Edge {
    Action action{};
    int n = 0;
    double q = 0.0;
    std::vector<Transition> gen;  // every generated outcome, duplicates kept
  };
  struct Node {
    State state{};
    int visits = 1;  // initialization convention
    std::vector<Edge> edges;
    std::vector<Action> untried;  // fixed widening order
  };

  double simulate(int idx, int depth, Rng& rng) {
    if (depth <= 0 || model_.terminal(nodes_[idx].state)) return 0.0;

    // Action progressive widening; untried actions enter in fixed order.
    int pick;
    {
      Node& nd = nodes_[idx];
      const double cap = p_.dpw_k * std::pow(nd.visits, p_.dpw_alpha);
      if (!nd.untried.empty() &&
          static_cast<double>(nd.edges.size()) <= cap) {
        Edge e;
        e.action = nd.untried.front();
        nd.untried.erase(nd.untried.begin());
        nd.edges.push_back(std::move(e));
        pick = static_cast<int>(nd.edges.size()) - 1;
      } else {
        pick = 0;
        double best = -1e300;
        const double lg = std::log(static_cast<double>(nd.visits));
        for (int k = 0; k < static_cast<int>(nd.edges.size()); ++k) {
          const Edge& e = nd.edges[k];
          if (e.n == 0) {  // fresh edge from a previous widening: take it
            pick = k;
            best = 1e300;
            break;
          }
          const double u = e.q + p_.ucb_c * std::sqrt(lg / e.n);
          if (u > best) {
            best = u;
            pick = k;
          }
        }
      }
    }

    double total;
    const double state_cap =
        p_.dpw_k * std::pow(nodes_[idx].edges[pick].n, p_.dpw_alpha);
    if (static_cast<double>(nodes_[idx].edges[pick].gen.size()) <= state_cap) {
      // Widen: one fresh generative sample, evaluated by rollout.
      const auto out =
          model_.step(nodes_[idx].state, nodes_[idx].edges[pick].action, rng);
      Node child;
      child.state = out.next;
      for (const Action& a : model_.actions(out.next)) {
        child.untried.push_back(a);
      }
      nodes_.push_back(std::move(child));
      const int child_idx = static_cast<int>(nodes_.size()) - 1;
      Edge& e = nodes_[idx].edges[pick];
      e.gen.push_back({child_idx, out.reward});
      track_cap(e);
      total = out.reward +
              p_.gamma * rollout(nodes_[child_idx].state, depth - 1, rng);
    } else {
      Edge& e = nodes_[idx].edges[pick];
      const Transition t = e.gen[draw_index(rng, e.gen.size())];
      total = t.reward + p_.gamma * simulate(t.child, depth - 1, rng);
    }

    Node& nd = nodes_[idx];
    Edge& e = nd.edges[pick];
    nd.visits += 1;
    e.n += 1;
    e.q += (total - e.q) / e.n;
    return total;
  }

  double rollout(State s, int depth, Rng& rng) {
    double ret = 0.0, disc = 1.0;
    for (int d = 0; d < depth && !model_.terminal(s); ++d) {
      const auto out = model_.step(s, model_.rollout_action(s), rng);
      ret += disc * out.reward;
      disc *= p_.gamma;
      s = out.next;
    }
    return ret;
  }

  void track_cap(const Edge& e) {
    const double cap = std::ceil(p_.dpw_k * std::pow(e.n + 1, p_.dpw_alpha));
    worst_cap_slack_ =
        std::max(worst_cap_slack_, static_cast<double>(e.gen.size()) - cap);
  }

  Model model_;
  PlannerParams p_;
  std::vector<Node> nodes_;
  double worst_cap_slack_ = -1e300;
};

}  // namespace laneplan
