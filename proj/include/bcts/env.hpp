#ifndef BCTS_ENV_HPP
#define BCTS_ENV_HPP

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcts/common.hpp"

namespace bcts {

/// Opaque handle to an environment state. Only the owning model interprets it.
using StateToken = std::uint64_t;

/// Action index in [0, A).
using ActionId = std::uint32_t;

struct StepBatch {
  std::vector<StateToken> next;
  std::vector<double> rewards;
};

/**
 * Deterministic batched transition contract.
 *
 * Implementations are immutable after construction, so step_batch may be
 * called concurrently. Terminal states are absorbing: any action maps a
 * terminal state to itself with reward 0.
 */
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual double gamma() const = 0;
  virtual StateToken start_state(std::uint64_t episode_seed = 0) const = 0;
  virtual bool is_terminal(StateToken s) const = 0;

  /// Writes successor and reward of (states[i], actions[i]) into next[i] and
  /// rewards[i]. All four spans must have equal length.
  virtual void step_batch(std::span<const StateToken> states,
                          std::span<const ActionId> actions,
                          std::span<StateToken> next,
                          std::span<double> rewards) const = 0;

  /// True when the reachable state set is finite and can be listed.
  virtual bool enumerable() const { return false; }

  /// Every reachable state exactly once, in a stable order.
  virtual std::vector<StateToken> enumerate_states() const {
    throw UnsupportedError(kind() + ": state space is not enumerable");
  }

  std::pair<StateToken, double> step(StateToken s, ActionId a) const {
    StateToken next = 0;
    double reward = 0.0;
    step_batch(std::span<const StateToken>(&s, 1), std::span<const ActionId>(&a, 1),
               std::span<StateToken>(&next, 1), std::span<double>(&reward, 1));
    return {next, reward};
  }
};

using ModelPtr = std::shared_ptr<const ForwardModel>;

inline StepBatch step_batch(const ForwardModel& model, std::span<const StateToken> states,
                            std::span<const ActionId> actions) {
  if (states.size() != actions.size()) {
    throw DomainError("step_batch: states and actions differ in length");
  }
  if (states.empty()) throw DomainError("step_batch: empty batch");
  StepBatch out{std::vector<StateToken>(states.size()), std::vector<double>(states.size())};
  model.step_batch(states, actions, out.next, out.rewards);
  return out;
}

inline std::vector<StateToken> enumerate_states(const ForwardModel& model) {
  return model.enumerate_states();
}

/**
 * Finite deterministic MDP stored as dense transition and reward tables.
 * Tokens are the dense state indices. All shipped finite environments are
 * instances of this class; their generators only differ in how they fill
 * the tables.
 */
class TabularModel : public ForwardModel {
 public:
  TabularModel(std::string kind, std::size_t state_count, std::size_t action_count,
               double gamma)
      : kind_(std::move(kind)),
        states_(state_count),
        actions_(action_count),
        gamma_(gamma),
        next_(state_count * action_count),
        reward_(state_count * action_count, 0.0),
        terminal_(state_count, false) {
    if (action_count < 2) throw ConfigError("action count must be at least 2");
    if (state_count == 0) throw ConfigError("state count must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    for (std::size_t s = 0; s < state_count; ++s) {
      for (std::size_t a = 0; a < action_count; ++a) next_[s * action_count + a] = s;
    }
  }

  std::string kind() const override { return kind_; }
  std::size_t action_count() const override { return actions_; }
  double gamma() const override { return gamma_; }
  std::size_t state_count() const { return states_; }

  StateToken start_state(std::uint64_t episode_seed = 0) const override {
    if (starts_.empty()) return start_;
    return starts_[mix64(episode_seed) % starts_.size()];
  }

  bool is_terminal(StateToken s) const override { return terminal_[checked(s)]; }

  void step_batch(std::span<const StateToken> states, std::span<const ActionId> actions,
                  std::span<StateToken> next, std::span<double> rewards) const override {
    const std::size_t n = states.size();
    if (actions.size() != n || next.size() != n || rewards.size() != n) {
      throw DomainError("step_batch: span lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = checked(states[i]);
      if (actions[i] >= actions_) throw DomainError("step_batch: action index out of range");
      if (terminal_[s]) {
        next[i] = states[i];
        rewards[i] = 0.0;
        continue;
      }
      const std::size_t k = s * actions_ + actions[i];
      next[i] = next_[k];
      rewards[i] = reward_[k];
    }
  }

  bool enumerable() const override { return true; }

  /// Breadth-first order from the start state(s); unreachable states excluded.
  std::vector<StateToken> enumerate_states() const override {
    std::vector<bool> seen(states_, false);
    std::vector<StateToken> order;
    std::deque<std::size_t> frontier;
    auto push = [&](std::size_t s) {
      if (!seen[s]) {
        seen[s] = true;
        order.push_back(s);
        frontier.push_back(s);
      }
    };
    push(start_);
    for (StateToken s : starts_) push(s);
    while (!frontier.empty()) {
      const std::size_t s = frontier.front();
      frontier.pop_front();
      if (terminal_[s]) continue;
      for (std::size_t a = 0; a < actions_; ++a) push(next_[s * actions_ + a]);
    }
    return order;
  }

  // Builder interface used by the environment generators.
  void set_transition(std::size_t s, std::size_t a, std::size_t next, double reward) {
    next_[s * actions_ + a] = next;
    reward_[s * actions_ + a] = reward;
  }
  void set_terminal(std::size_t s, bool terminal = true) { terminal_[s] = terminal; }
  void set_start(std::size_t s) { start_ = s; }
  void set_start_distribution(std::vector<StateToken> starts) { starts_ = std::move(starts); }
  void set_corridor(std::vector<StateToken> corridor) { corridor_ = std::move(corridor); }

  std::size_t next_index(std::size_t s, std::size_t a) const { return next_[s * actions_ + a]; }
  double reward_at(std::size_t s, std::size_t a) const { return reward_[s * actions_ + a]; }

  /// States reachable under the optimal policy; only populated for shift-grid.
  std::span<const StateToken> corridor() const { return corridor_; }

 private:
  std::size_t checked(StateToken s) const {
    if (s >= states_) throw DomainError("unknown state token " + std::to_string(s));
    return static_cast<std::size_t>(s);
  }

  std::string kind_;
  std::size_t states_;
  std::size_t actions_;
  double gamma_;
  std::vector<std::size_t> next_;
  std::vector<double> reward_;
  std::vector<bool> terminal_;
  std::size_t start_ = 0;
  std::vector<StateToken> starts_;
  std::vector<StateToken> corridor_;
};

}  // namespace bcts

#endif  // BCTS_ENV_HPP
