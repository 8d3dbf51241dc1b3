#ifndef BCTS_SEARCH_HPP
#define BCTS_SEARCH_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "bcts/bias.hpp"
#include "bcts/env.hpp"
#include "bcts/value_fn.hpp"

namespace bcts {

inline constexpr std::uint64_t kDefaultNodeBudget = 10'000'000;

/**
 * One depth slice of an exhaustive search tree. Child j of entry i of the
 * previous layer sits at index i * A + j, so at depth k the root action of
 * entry i is i / A^(k-1).
 */
struct TreeLayer {
  std::vector<StateToken> states;
  std::vector<double> cum_reward;  // sum_{t<k} gamma^t r_t
  std::vector<ActionId> root_action;

  std::size_t size() const { return states.size(); }
};

struct PlanResult {
  ActionId chosen_action = 0;
  std::vector<double> root_q;  // values the argmax ran over (corrected under a penalty)
  std::vector<double> raw_q;   // d-step values before any penalty
  ActionId base_action = 0;        // pi_o at the root
  double penalty = 0.0;            // subtracted from non-base actions
  std::size_t depth = 0;
  std::uint64_t leaf_count = 0;
  std::uint64_t batched_calls = 0;  // forward-model invocations
  std::uint64_t transitions = 0;    // (state, action) pairs stepped
};

inline nlohmann::ordered_json to_json(const PlanResult& r) {
  nlohmann::ordered_json j;
  j["action"] = r.chosen_action;
  j["root_q"] = r.root_q;
  j["depth"] = r.depth;
  j["leaves"] = r.leaf_count;
  j["batched_calls"] = r.batched_calls;
  j["transitions"] = r.transitions;
  return j;
}

/// gamma^0 .. gamma^d by repeated multiplication. Every planner uses these
/// so their accumulations agree bit for bit.
inline std::vector<double> discount_powers(double gamma, std::size_t depth) {
  std::vector<double> p(depth + 1, 1.0);
  for (std::size_t k = 1; k <= depth; ++k) p[k] = p[k - 1] * gamma;
  return p;
}

/// d = 0 policy: the evaluator's base action.
inline ActionId greedy_action(const QFunction& q, StateToken s) { return q.base_action(s); }
inline ActionId greedy_action(std::span<const double> row) { return argmax_action(row); }

/// Number of transitions an exhaustive depth-d tree steps: A + A^2 + ... + A^d.
inline std::uint64_t tree_transitions(std::size_t actions, std::size_t depth) {
  std::uint64_t total = 0, layer = 1;
  for (std::size_t k = 0; k < depth; ++k) {
    layer *= actions;
    total += layer;
  }
  return total;
}

namespace detail {

inline std::uint64_t checked_leaf_count(std::size_t actions, std::size_t depth,
                                        std::uint64_t budget) {
  if (depth == 0) throw ContractError("planner depth must be >= 1; use greedy_action for d = 0");
  if (actions < 2) throw DomainError("planner needs A >= 2");
  const std::uint64_t leaves = saturating_pow(actions, static_cast<unsigned>(depth), budget);
  if (leaves > budget) {
    throw ResourceError("A^d = " + std::to_string(actions) + "^" + std::to_string(depth) +
                        " leaves exceeds the node budget of " + std::to_string(budget));
  }
  return leaves;
}

// Replicates `layer` A-fold in canonical order and fills the step inputs.
inline TreeLayer replicate(const TreeLayer& layer, std::size_t actions,
                           std::vector<ActionId>& step_actions) {
  const std::size_t n = layer.size() * actions;
  TreeLayer next;
  next.states.resize(n);
  next.cum_reward.resize(n);
  next.root_action.resize(n);
  step_actions.resize(n);
  const bool first = layer.root_action.empty();
  for (std::size_t i = 0; i < layer.size(); ++i) {
    for (std::size_t j = 0; j < actions; ++j) {
      const std::size_t k = i * actions + j;
      next.states[k] = layer.states[i];
      next.cum_reward[k] = layer.cum_reward[i];
      next.root_action[k] = first ? static_cast<ActionId>(j) : layer.root_action[i];
      step_actions[k] = static_cast<ActionId>(j);
    }
  }
  return next;
}

inline TreeLayer root_layer(StateToken root) { return TreeLayer{{root}, {0.0}, {}}; }

struct LeafScan {
  std::vector<double> root_q;
};

// Backs every leaf with gamma^d max_a Q(leaf, a) (0 at terminal leaves) and
// reduces to per-root-action maxima. Leaves are evaluated in fixed chunks.
inline std::vector<double> back_up_leaves(const ForwardModel& model, const QFunction& q,
                                          const TreeLayer& leaves, double leaf_discount,
                                          ActionId pi_o, std::size_t actions) {
  std::vector<double> root_q(actions, -std::numeric_limits<double>::infinity());
  constexpr std::size_t kChunk = 1 << 15;
  std::vector<LeafTag> tags;
  std::vector<double> values;
  for (std::size_t begin = 0; begin < leaves.size(); begin += kChunk) {
    const std::size_t end = std::min(leaves.size(), begin + kChunk);
    const std::size_t n = end - begin;
    tags.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      tags[i] = leaves.root_action[begin + i] == pi_o ? LeafTag::kOnPolicy : LeafTag::kOffPolicy;
    }
    values.resize(n * actions);
    q.evaluate(std::span<const StateToken>(leaves.states).subspan(begin, n), tags, values);
    for (std::size_t i = 0; i < n; ++i) {
      const StateToken s = leaves.states[begin + i];
      double boot = 0.0;
      if (!model.is_terminal(s)) {
        const double* row = values.data() + i * actions;
        boot = *std::max_element(row, row + actions);
      }
      const double total = leaves.cum_reward[begin + i] + leaf_discount * boot;
      double& best = root_q[leaves.root_action[begin + i]];
      best = std::max(best, total);
    }
  }
  return root_q;
}

inline void finish(PlanResult& r, const std::optional<PenaltySpec>& penalty) {
  r.raw_q = r.root_q;
  if (penalty) {
    r.root_q = corrected_root_q(r.raw_q, r.depth, *penalty, r.base_action);
    r.penalty = penalty->amount();
  }
  r.chosen_action = argmax_action(r.root_q);
}

inline void check_penalty(const std::optional<PenaltySpec>& penalty, std::size_t actions,
                          std::size_t depth) {
  if (penalty && (penalty->actions != actions || penalty->depth != depth)) {
    throw ContractError("penalty spec does not match planner A/d");
  }
}

}  // namespace detail

/// Expands the full tree below `root` to `depth`, one step_batch call per
/// layer, and returns the leaf layer. `calls` receives the number of
/// model invocations.
inline TreeLayer expand_tree(const ForwardModel& model, StateToken root, std::size_t depth,
                             double gamma, std::uint64_t node_budget = kDefaultNodeBudget,
                             std::uint64_t* calls = nullptr) {
  const std::size_t actions = model.action_count();
  detail::checked_leaf_count(actions, depth, node_budget);
  const auto disc = discount_powers(gamma, depth);
  TreeLayer layer = detail::root_layer(root);
  std::vector<ActionId> step_actions;
  std::vector<StateToken> next;
  std::vector<double> rewards;
  for (std::size_t k = 0; k < depth; ++k) {
    layer = detail::replicate(layer, actions, step_actions);
    next.resize(layer.size());
    rewards.resize(layer.size());
    model.step_batch(layer.states, step_actions, next, rewards);
    if (calls) ++*calls;
    for (std::size_t i = 0; i < layer.size(); ++i) layer.cum_reward[i] += disc[k] * rewards[i];
    layer.states.swap(next);
  }
  return layer;
}

/**
 * Exhaustive layer-synchronous tree search: replicate the frontier A-fold,
 * advance it with one batched model call per depth, accumulate discounted
 * rewards, back the leaves with gamma^d max_a Q, and take the best leaf per
 * root action. With a penalty, every root action other than pi_o is
 * lowered by the penalty amount before the argmax.
 */
inline PlanResult batch_bfs_plan(const ForwardModel& model, const QFunction& q, StateToken root,
                                 std::size_t depth, double gamma,
                                 const std::optional<PenaltySpec>& penalty = std::nullopt,
                                 std::uint64_t node_budget = kDefaultNodeBudget) {
  const std::size_t actions = model.action_count();
  PlanResult r;
  r.leaf_count = detail::checked_leaf_count(actions, depth, node_budget);
  detail::check_penalty(penalty, actions, depth);
  r.depth = depth;
  r.base_action = q.base_action(root);
  const TreeLayer leaves = expand_tree(model, root, depth, gamma, node_budget, &r.batched_calls);
  r.transitions = tree_transitions(actions, depth);
  r.root_q = detail::back_up_leaves(model, q, leaves, discount_powers(gamma, depth)[depth],
                                    r.base_action, actions);
  detail::finish(r, penalty);
  return r;
}

/// Breadth-first search with one single-transition model call per node
/// (the unbatched baseline for benchmarking).
inline PlanResult bfs_seq_plan(const ForwardModel& model, const QFunction& q, StateToken root,
                               std::size_t depth, double gamma,
                               const std::optional<PenaltySpec>& penalty = std::nullopt,
                               std::uint64_t node_budget = kDefaultNodeBudget) {
  const std::size_t actions = model.action_count();
  PlanResult r;
  r.leaf_count = detail::checked_leaf_count(actions, depth, node_budget);
  detail::check_penalty(penalty, actions, depth);
  r.depth = depth;
  r.base_action = q.base_action(root);
  const auto disc = discount_powers(gamma, depth);
  TreeLayer layer = detail::root_layer(root);
  std::vector<ActionId> step_actions;
  for (std::size_t k = 0; k < depth; ++k) {
    layer = detail::replicate(layer, actions, step_actions);
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const auto [next, reward] = model.step(layer.states[i], step_actions[i]);
      ++r.batched_calls;
      ++r.transitions;
      layer.states[i] = next;
      layer.cum_reward[i] += disc[k] * reward;
    }
  }
  r.root_q = detail::back_up_leaves(model, q, layer, disc[depth], r.base_action, actions);
  detail::finish(r, penalty);
  return r;
}

namespace detail {

struct DfsContext {
  const ForwardModel& model;
  const QFunction& q;
  std::size_t depth;
  std::size_t actions;
  std::vector<double> disc;
  ActionId pi_o;
  PlanResult& result;
};

inline void dfs_visit(DfsContext& ctx, StateToken s, std::size_t k, double cum,
                      ActionId root_action) {
  if (k == ctx.depth) {
    double boot = 0.0;
    const LeafTag tag = root_action == ctx.pi_o ? LeafTag::kOnPolicy : LeafTag::kOffPolicy;
    if (!ctx.model.is_terminal(s)) {
      const auto row = ctx.q.row(s, tag);
      boot = *std::max_element(row.begin(), row.end());
    }
    double& best = ctx.result.root_q[root_action];
    best = std::max(best, cum + ctx.disc[ctx.depth] * boot);
    return;
  }
  for (std::size_t a = 0; a < ctx.actions; ++a) {
    const auto [next, reward] = ctx.model.step(s, static_cast<ActionId>(a));
    ++ctx.result.batched_calls;
    ++ctx.result.transitions;
    dfs_visit(ctx, next, k + 1, cum + ctx.disc[k] * reward,
              k == 0 ? static_cast<ActionId>(a) : root_action);
  }
}

}  // namespace detail

/// Recursive depth-first reference planner: same result as batch_bfs_plan,
/// one single-transition model call per tree edge.
inline PlanResult dfs_plan(const ForwardModel& model, const QFunction& q, StateToken root,
                           std::size_t depth, double gamma,
                           const std::optional<PenaltySpec>& penalty = std::nullopt,
                           std::uint64_t node_budget = kDefaultNodeBudget) {
  const std::size_t actions = model.action_count();
  PlanResult r;
  r.leaf_count = detail::checked_leaf_count(actions, depth, node_budget);
  detail::check_penalty(penalty, actions, depth);
  r.depth = depth;
  r.base_action = q.base_action(root);
  r.root_q.assign(actions, -std::numeric_limits<double>::infinity());
  detail::DfsContext ctx{model, q, depth, actions, discount_powers(gamma, depth), r.base_action, r};
  detail::dfs_visit(ctx, root, 0, 0.0, 0);
  detail::finish(r, penalty);
  return r;
}

/// d-step value of a single root action: the best discounted return over
/// all A^(d-1) continuations, backed by gamma^d max_a Q at the leaves.
inline double d_step_q(const ForwardModel& model, const QFunction& q, StateToken root,
                       ActionId root_action, std::size_t depth, double gamma,
                       std::uint64_t node_budget = kDefaultNodeBudget) {
  const std::size_t actions = model.action_count();
  detail::checked_leaf_count(actions, depth, node_budget);
  if (root_action >= actions) throw DomainError("d_step_q: root action out of range");
  const auto [first, reward] = model.step(root, root_action);
  const auto disc = discount_powers(gamma, depth);
  TreeLayer leaves =
      depth > 1 ? expand_tree(model, first, depth - 1, gamma, node_budget) : detail::root_layer(first);
  // Re-base the subtree onto the root: shift by one step and add the first reward.
  for (double& c : leaves.cum_reward) c = reward + gamma * c;
  const ActionId pi_o = q.base_action(root);
  leaves.root_action.assign(leaves.size(), root_action);
  const auto per_action = detail::back_up_leaves(model, q, leaves, disc[depth], pi_o, actions);
  return per_action[root_action];
}

/// Builds the Bellman-corrected penalty for a search from `root`, using
/// the root Bellman errors of the base policy.
inline PenaltySpec make_penalty_spec(const ForwardModel& model, const QFunction& q,
                                     StateToken root, std::size_t depth, double gamma,
                                     double c = 1.0, bool clamp_at_zero = false) {
  PenaltySpec spec;
  spec.stats = root_bellman_stats(model, q, root, gamma, q.base_action(root));
  spec.actions = model.action_count();
  spec.depth = depth;
  spec.gamma = gamma;
  spec.c = c;
  spec.clamp_penalty_at_zero = clamp_at_zero;
  return spec;
}

/// Corrected values for an uncorrected plan.
inline std::vector<double> corrected_root_q(const PlanResult& plan, const PenaltySpec& spec,
                                            ActionId pi_o) {
  return corrected_root_q(plan.raw_q, plan.depth, spec, pi_o);
}

/// Bellman-corrected tree search at `root`.
inline PlanResult bcts_plan(const ForwardModel& model, const QFunction& q, StateToken root,
                            std::size_t depth, double gamma, double c = 1.0,
                            bool clamp_at_zero = false,
                            std::uint64_t node_budget = kDefaultNodeBudget) {
  return batch_bfs_plan(model, q, root, depth, gamma,
                        make_penalty_spec(model, q, root, depth, gamma, c, clamp_at_zero),
                        node_budget);
}

}  // namespace bcts

#endif  // BCTS_SEARCH_HPP
