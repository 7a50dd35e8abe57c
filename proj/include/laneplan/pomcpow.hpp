#pragma once

#include <cassert>
#include <cmath>
#include <vector>

#include "laneplan/mcts.hpp"
#include "laneplan/rng.hpp"

namespace laneplan {

// POMCPOW: best-first search over the belief MDP with progressive widening on
// actions and observations, and weighted particle collections per observation
// node. The Model provides:
//   State, Action, Obs;
//   actions(State); terminal(State); rollout_action(State);
//   step(State, Action, Rng&) -> {State next; Obs obs; double reward};
//   reward(State prev, Action, State next) -> double (recomputable);
//   obs_weight(Obs, State next) -> double (observation likelihood);
//   same_obs(Obs, Obs) -> bool.
// Counts follow the same initialize-to-1, increment-at-end convention as
// MctsDpw; a new observation leads to a rollout, a known one resamples its
// particle collection proportional to the accumulated likelihood weights.
template <typename Model>
class Pomcpow {
 public:
  using State = typename Model::State;
  using Action = typename Model::Action;
  using Obs = typename Model::Obs;

  Pomcpow(const Model& model, const PlannerParams& params)
      : model_(model), p_(params) {}

  // `src` draws a root state from the current belief each iteration.
  template <typename Src>
  Action plan(Src&& src, Rng& rng) {
    nodes_.clear();
    nodes_.emplace_back();
    {
      const State& s0 = src(rng);
      for (const Action& a : model_.actions(s0)) {
        nodes_[0].untried.push_back(a);
      }
      assert(!nodes_[0].untried.empty());
      if (nodes_[0].untried.size() == 1) return nodes_[0].untried[0];
      simulate(s0, 0, p_.depth, rng);
    }
    for (int i = 1; i < p_.iterations; ++i) {
      simulate(src(rng), 0, p_.depth, rng);
    }
    const HNode& root = nodes_[0];
    int best = 0;
    for (int k = 1; k < static_cast<int>(root.edges.size()); ++k) {
      if (root.edges[k].q > root.edges[best].q) best = k;  // ties: lowest index
    }
    return root.edges[best].action;
  }

  double root_q(const Action& a) const {
    for (const auto& e : nodes_[0].edges) {
      if (e.action == a) return e.q;
    }
    return 0.0;
  }

 private:
  struct ObsChild {
    Obs obs{};
    int m = 0;  // generation hits, drives selection when widening is capped
    std::vector<State> belief;
    std::vector<double> weight;
    double weight_total = 0.0;
    int node;  // successor history node
  };
  struct Edge {
    Action action{};
    int n = 0;
    double q = 0.0;
    std::vector<ObsChild> children;
  };
  struct HNode {
    int visits = 1;
    std::vector<Edge> edges;
    std::vector<Action> untried;
  };

  double simulate(State s, int idx, int depth, Rng& rng) {
    if (depth <= 0 || model_.terminal(s)) return 0.0;

    int pick;
    {
      HNode& nd = nodes_[idx];
      assert(!nd.edges.empty() || !nd.untried.empty());
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
          const double u =
              e.n == 0 ? 1e300 : e.q + p_.ucb_c * std::sqrt(lg / e.n);
          if (u > best) {
            best = u;
            pick = k;
          }
        }
      }
    }

    auto out = model_.step(s, nodes_[idx].edges[pick].action, rng);

    // Observation widening: a fresh observation opens a node while capacity
    // allows; otherwise revisit one proportional to its generation hits.
    int oc;
    bool fresh = false;
    {
      Edge& e = nodes_[idx].edges[pick];
      const double cap = p_.dpw_k * std::pow(e.n, p_.dpw_alpha);
      if (static_cast<double>(e.children.size()) <= cap) {
        oc = -1;
        for (int k = 0; k < static_cast<int>(e.children.size()); ++k) {
          if (model_.same_obs(e.children[k].obs, out.obs)) {
            oc = k;
            break;
          }
        }
        if (oc < 0) {
          fresh = true;
          ObsChild c;
          c.obs = out.obs;
          c.node = static_cast<int>(nodes_.size());
          nodes_.emplace_back();  // successor history node (invalidates refs)
          Edge& e2 = nodes_[idx].edges[pick];
          e2.children.push_back(std::move(c));
          oc = static_cast<int>(e2.children.size()) - 1;
        }
        nodes_[idx].edges[pick].children[oc].m += 1;
      } else {
        double target = draw_unit(rng);
        int total = 0;
        for (const ObsChild& c : e.children) total += c.m;
        target *= total;
        oc = static_cast<int>(e.children.size()) - 1;
        double cum = 0.0;
        for (int k = 0; k < static_cast<int>(e.children.size()); ++k) {
          cum += e.children[k].m;
          if (target < cum) {
            oc = k;
            break;
          }
        }
      }
    }

    double total;
    {
      ObsChild& c = nodes_[idx].edges[pick].children[oc];
      c.belief.push_back(out.next);
      const double z = model_.obs_weight(c.obs, out.next);
      c.weight.push_back(z);
      c.weight_total += z;
    }
    if (fresh) {
      // The untried set of the new history node is not needed up front: it is
      // filled lazily on first visit because actions may depend on the state.
      total = out.reward + p_.gamma * rollout(out.next, depth - 1, rng);
    } else {
      // Resample a continuation state by likelihood weight and recurse.
      ObsChild& c = nodes_[idx].edges[pick].children[oc];
      int pick_m = static_cast<int>(c.belief.size()) - 1;
      if (c.weight_total > 0.0) {
        double target = draw_unit(rng) * c.weight_total;
        double cum = 0.0;
        for (int k = 0; k < static_cast<int>(c.belief.size()); ++k) {
          cum += c.weight[k];
          if (target < cum) {
            pick_m = k;
            break;
          }
        }
      }
      const State s2 = c.belief[pick_m];
      const double r2 =
          model_.reward(s, nodes_[idx].edges[pick].action, s2);
      const int child_node = c.node;
      ensure_actions(child_node, s2);
      total = r2 + p_.gamma * simulate(s2, child_node, depth - 1, rng);
    }

    HNode& nd = nodes_[idx];
    Edge& e = nd.edges[pick];
    nd.visits += 1;
    e.n += 1;
    e.q += (total - e.q) / e.n;
    return total;
  }

  // History nodes learn their action set from the first concrete state that
  // reaches them (action availability is observation-determined here).
  void ensure_actions(int idx, const State& s) {
    HNode& nd = nodes_[idx];
    if (!nd.edges.empty() || !nd.untried.empty()) return;
    for (const Action& a : model_.actions(s)) nd.untried.push_back(a);
  }

  double rollout(State s, int depth, Rng& rng) {
    double ret = 0.0, disc = 1.0;
    for (int d = 0; d < depth && !model_.terminal(s); ++d) {
      auto out = model_.step(s, model_.rollout_action(s), rng);
      ret += disc * out.reward;
      disc *= p_.gamma;
      s = out.next;
    }
    return ret;
  }

  Model model_;
  PlannerParams p_;
  std::vector<HNode> nodes_;
};

}  // namespace laneplan
