#ifndef BCTS_VALUE_FN_HPP
#define BCTS_VALUE_FN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bcts/env.hpp"
#include "bcts/normal.hpp"

namespace bcts {

/// Whether a queried leaf descends from the base policy's root action.
/// Only the noise-injected wrapper reads it; other evaluators ignore it.
enum class LeafTag : std::uint8_t { kOffPolicy = 0, kOnPolicy = 1 };

/// Lowest-index argmax.
inline ActionId argmax_action(std::span<const double> row) {
  if (row.empty()) throw ContractError("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t a = 1; a < row.size(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  return static_cast<ActionId>(best);
}

/**
 * Batched state-action value evaluator. Implementations are immutable and
 * pure: equal queries return equal values, from any thread.
 */
class QFunction {
 public:
  virtual ~QFunction() = default;

  virtual std::size_t action_count() const = 0;

  /// Fills `out` (states.size() x A, row-major). `tags` is either empty,
  /// meaning every row is off-policy, or one tag per state.
  virtual void evaluate(std::span<const StateToken> states, std::span<const LeafTag> tags,
                        std::span<double> out) const = 0;

  /// The base policy pi_o at `s`.
  virtual ActionId base_action(StateToken s) const { return argmax_action(row(s)); }

  /// An evaluator of the same family drawn with a different seed, or null
  /// when the evaluator has no seed.
  virtual std::shared_ptr<const QFunction> reseeded(std::uint64_t /*seed*/) const {
    return nullptr;
  }

  std::vector<double> row(StateToken s, LeafTag tag = LeafTag::kOffPolicy) const {
    std::vector<double> out(action_count());
    evaluate(std::span<const StateToken>(&s, 1), std::span<const LeafTag>(&tag, 1), out);
    return out;
  }

  double value(StateToken s, ActionId a, LeafTag tag = LeafTag::kOffPolicy) const {
    return row(s, tag).at(a);
  }
};

using QPtr = std::shared_ptr<const QFunction>;

namespace detail {
inline void check_eval_spans(std::size_t n, std::size_t tags, std::size_t out, std::size_t actions) {
  if (tags != 0 && tags != n) throw ContractError("evaluate: tag count must be 0 or N");
  if (out != n * actions) throw ContractError("evaluate: output must hold N x A values");
}
}  // namespace detail

/// Same value for every state-action pair.
class ConstantQ : public QFunction {
 public:
  ConstantQ(std::size_t actions, double value) : actions_(actions), value_(value) {
    if (actions < 1) throw ConfigError("ConstantQ: need at least one action");
  }
  std::size_t action_count() const override { return actions_; }
  void evaluate(std::span<const StateToken> states, std::span<const LeafTag> tags,
                std::span<double> out) const override {
    detail::check_eval_spans(states.size(), tags.size(), out.size(), actions_);
    std::fill(out.begin(), out.end(), value_);
  }

 private:
  std::size_t actions_;
  double value_;
};

/// Dense table indexed by state token; tokens must lie in [0, state_count).
class TabularQ : public QFunction {
 public:
  TabularQ(std::size_t state_count, std::size_t actions, double init = 0.0)
      : states_(state_count), actions_(actions), values_(state_count * actions, init) {
    if (actions < 1) throw ConfigError("TabularQ: need at least one action");
  }

  std::size_t action_count() const override { return actions_; }
  std::size_t state_count() const { return states_; }

  void evaluate(std::span<const StateToken> states, std::span<const LeafTag> tags,
                std::span<double> out) const override {
    detail::check_eval_spans(states.size(), tags.size(), out.size(), actions_);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const double* src = values_.data() + index(states[i]) * actions_;
      std::copy(src, src + actions_, out.begin() + static_cast<std::ptrdiff_t>(i * actions_));
    }
  }

  double at(StateToken s, ActionId a) const { return values_[index(s) * actions_ + action(a)]; }
  void set(StateToken s, ActionId a, double v) { values_[index(s) * actions_ + action(a)] = v; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(StateToken s) const {
    if (s >= states_) throw DomainError("TabularQ: unknown state token " + std::to_string(s));
    return static_cast<std::size_t>(s);
  }
  std::size_t action(ActionId a) const {
    if (a >= actions_) throw DomainError("TabularQ: action index out of range");
    return a;
  }

  std::size_t states_;
  std::size_t actions_;
  std::vector<double> values_;
};

/// Leaf noise scales and seed for the on/off-policy noise model.
struct NoiseSpec {
  double sigma_o = 0.0;
  double sigma_e = 0.0;
  std::uint64_t seed = 0;
};

/**
 * Oracle plus Gaussian noise: N(0, sigma_o^2) on leaves tagged on-policy,
 * N(0, sigma_e^2) otherwise. The draw is a hash of (seed, state, action,
 * tag), so the wrapper stays pure and repeated queries agree. The base
 * policy is the oracle's argmax.
 */
class NoisyQ : public QFunction {
 public:
  NoisyQ(QPtr oracle, NoiseSpec spec) : oracle_(std::move(oracle)), spec_(spec) {
    if (!oracle_) throw ConfigError("NoisyQ: null oracle");
    const bool noiseless = spec.sigma_o == 0.0 && spec.sigma_e == 0.0;
    if (!(spec.sigma_o >= 0.0) || !(noiseless || spec.sigma_o < spec.sigma_e)) {
      throw ConfigError("NoisyQ: require 0 <= sigma_o < sigma_e (or both zero)");
    }
  }

  std::size_t action_count() const override { return oracle_->action_count(); }

  void evaluate(std::span<const StateToken> states, std::span<const LeafTag> tags,
                std::span<double> out) const override {
    const std::size_t a_count = action_count();
    detail::check_eval_spans(states.size(), tags.size(), out.size(), a_count);
    oracle_->evaluate(states, tags, out);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const LeafTag tag = tags.empty() ? LeafTag::kOffPolicy : tags[i];
      const double sigma = tag == LeafTag::kOnPolicy ? spec_.sigma_o : spec_.sigma_e;
      if (sigma == 0.0) continue;
      for (std::size_t a = 0; a < a_count; ++a) {
        out[i * a_count + a] += sigma * standard_draw(states[i], static_cast<ActionId>(a), tag);
      }
    }
  }

  ActionId base_action(StateToken s) const override { return oracle_->base_action(s); }

  std::shared_ptr<const QFunction> reseeded(std::uint64_t seed) const override {
    NoiseSpec spec = spec_;
    spec.seed = hash_combine(spec_.seed, seed);
    return std::make_shared<NoisyQ>(oracle_, spec);
  }

  const NoiseSpec& spec() const { return spec_; }
  const QPtr& oracle() const { return oracle_; }

  /// The standard-normal variate behind the noise at (s, a, tag).
  double standard_draw(StateToken s, ActionId a, LeafTag tag) const {
    std::uint64_t h = hash_combine(spec_.seed, s);
    h = hash_combine(h, a);
    h = hash_combine(h, static_cast<std::uint64_t>(tag));
    return inv_norm_cdf(bits_to_open_unit(h));
  }

 private:
  QPtr oracle_;
  NoiseSpec spec_;
};

/// max_a Q(s', a), or 0 when s' is terminal.
inline double bootstrap_value(const ForwardModel& model, const QFunction& q, StateToken s,
                              LeafTag tag = LeafTag::kOffPolicy) {
  if (model.is_terminal(s)) return 0.0;
  const auto r = q.row(s, tag);
  return *std::max_element(r.begin(), r.end());
}

/// sup over enumerated (s, a) of |r + gamma max Q(s') - Q(s, a)|.
inline double bellman_residual(const ForwardModel& model, const QFunction& q, double gamma) {
  double worst = 0.0;
  for (StateToken s : model.enumerate_states()) {
    if (model.is_terminal(s)) continue;
    const auto row = q.row(s);
    for (std::size_t a = 0; a < model.action_count(); ++a) {
      const auto [next, reward] = model.step(s, static_cast<ActionId>(a));
      worst = std::max(worst, std::abs(reward + gamma * bootstrap_value(model, q, next) - row[a]));
    }
  }
  return worst;
}

/**
 * Q* by synchronous value iteration over the enumerated states, stopped
 * once the sup-norm change of a sweep is at most `tolerance`.
 * Terminal states keep value 0.
 */
inline std::shared_ptr<TabularQ> dp_exact_q(const ForwardModel& model, double gamma,
                                            double tolerance, std::size_t max_sweeps = 1000000) {
  if (!model.enumerable()) throw UnsupportedError("dp_exact_q: model is not enumerable");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("dp_exact_q: gamma must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw DomainError("dp_exact_q: tolerance must be positive");

  const auto states = model.enumerate_states();
  const std::size_t actions = model.action_count();
  StateToken max_token = 0;
  for (StateToken s : states) max_token = std::max(max_token, s);
  if (max_token >= states.size() * 16 + 1024) {
    throw UnsupportedError("dp_exact_q: state tokens are not dense indices");
  }
  const std::size_t table = static_cast<std::size_t>(max_token) + 1;

  // Successor/reward tables for the live states, computed with one batch.
  std::vector<StateToken> live;
  for (StateToken s : states) {
    if (!model.is_terminal(s)) live.push_back(s);
  }
  if (live.empty()) return std::make_shared<TabularQ>(table, actions);
  std::vector<StateToken> from(live.size() * actions);
  std::vector<ActionId> act(live.size() * actions);
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t a = 0; a < actions; ++a) {
      from[i * actions + a] = live[i];
      act[i * actions + a] = static_cast<ActionId>(a);
    }
  }
  const StepBatch steps = step_batch(model, from, act);
  std::vector<bool> terminal(table, false);
  for (StateToken s : states) terminal[s] = model.is_terminal(s);

  std::vector<double> q(table * actions, 0.0);
  std::vector<double> v(table, 0.0);
  std::vector<double> next_q(q.size(), 0.0);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t a = 0; a < actions; ++a) {
        const std::size_t k = i * actions + a;
        const StateToken succ = steps.next[k];
        const double target = steps.rewards[k] + gamma * (terminal[succ] ? 0.0 : v[succ]);
        const std::size_t slot = live[i] * actions + a;
        change = std::max(change, std::abs(target - q[slot]));
        next_q[slot] = target;
      }
    }
    q.swap(next_q);
    for (StateToken s : live) {
      const double* row = q.data() + s * actions;
      v[s] = *std::max_element(row, row + actions);
    }
    if (change <= tolerance) break;
  }

  auto out = std::make_shared<TabularQ>(table, actions);
  for (StateToken s : live) {
    for (std::size_t a = 0; a < actions; ++a) {
      out->set(s, static_cast<ActionId>(a), q[s * actions + a]);
    }
  }
  return out;
}

/// r(s,a) + gamma max_a' Q(s',a'): the depth-1 estimate of Q(s,a).
inline double one_step_estimate(const ForwardModel& model, const QFunction& q, StateToken s,
                                ActionId a, double gamma, LeafTag tag = LeafTag::kOffPolicy) {
  const auto [next, reward] = model.step(s, a);
  return reward + gamma * bootstrap_value(model, q, next, tag);
}

/// delta(s,a) = r(s,a) + gamma max_a' Q(s',a') - Q(s,a).
inline double bellman_error(const ForwardModel& model, const QFunction& q, StateToken s,
                            ActionId a, double gamma, LeafTag tag = LeafTag::kOffPolicy) {
  return one_step_estimate(model, q, s, a, gamma, tag) - q.value(s, a, tag);
}

/// Two-sample variance estimate of Q from its depth-0 and depth-1 values.
inline double variance_estimate(double delta) { return delta * delta / 2.0; }

/// Root Bellman statistics: |delta| of the base action and the mean |delta|
/// over the remaining A - 1 actions.
struct BellmanStats {
  double delta_o = 0.0;
  double delta_e = 0.0;
  std::vector<double> per_action;  // signed deltas
  ActionId base_action = 0;
};

inline BellmanStats bellman_stats_from_deltas(std::span<const double> deltas, ActionId pi_o) {
  if (deltas.size() < 2) throw DomainError("Bellman stats need at least two actions");
  if (pi_o >= deltas.size()) throw DomainError("base action out of range");
  BellmanStats st;
  st.per_action.assign(deltas.begin(), deltas.end());
  st.base_action = pi_o;
  st.delta_o = std::abs(deltas[pi_o]);
  double sum = 0.0;
  for (std::size_t a = 0; a < deltas.size(); ++a) {
    if (a != pi_o) sum += std::abs(deltas[a]);
  }
  st.delta_e = sum / static_cast<double>(deltas.size() - 1);
  return st;
}

/// Bellman errors of every root action from one batched depth-1 expansion.
/// Values along the base action's branch are queried on-policy.
inline BellmanStats root_bellman_stats(const ForwardModel& model, const QFunction& q,
                                       StateToken s, double gamma, ActionId pi_o) {
  const std::size_t actions = model.action_count();
  if (actions < 2) throw DomainError("root_bellman_stats: need A >= 2");
  std::vector<StateToken> from(actions, s);
  std::vector<ActionId> act(actions);
  for (std::size_t a = 0; a < actions; ++a) act[a] = static_cast<ActionId>(a);
  const StepBatch steps = step_batch(model, from, act);
  const auto on_row = q.row(s, LeafTag::kOnPolicy);
  const auto off_row = q.row(s, LeafTag::kOffPolicy);
  std::vector<double> deltas(actions);
  for (std::size_t a = 0; a < actions; ++a) {
    const LeafTag tag = a == pi_o ? LeafTag::kOnPolicy : LeafTag::kOffPolicy;
    const double here = tag == LeafTag::kOnPolicy ? on_row[a] : off_row[a];
    deltas[a] = steps.rewards[a] + gamma * bootstrap_value(model, q, steps.next[a], tag) - here;
  }
  return bellman_stats_from_deltas(deltas, pi_o);
}

/// CSV with header `state_id,action,q_value`, values at 17 significant digits.
inline void write_q_csv(std::ostream& os, const TabularQ& q) {
  os << "state_id,action,q_value\n";
  char buf[64];
  for (std::size_t s = 0; s < q.state_count(); ++s) {
    for (std::size_t a = 0; a < q.action_count(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", q.at(s, static_cast<ActionId>(a)));
      os << s << ',' << a << ',' << buf << '\n';
    }
  }
}

inline std::shared_ptr<TabularQ> read_q_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "state_id,action,q_value") {
    throw ConfigError("Q CSV: missing or wrong header");
  }
  struct Entry {
    std::size_t s, a;
    double v;
  };
  std::vector<Entry> entries;
  std::size_t max_s = 0, max_a = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f0, f1, f2;
    if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') || !std::getline(row, f2)) {
      throw ConfigError("Q CSV: malformed row \"" + line + "\"");
    }
    try {
      Entry e{std::stoull(f0), std::stoull(f1), std::stod(f2)};
      max_s = std::max(max_s, e.s);
      max_a = std::max(max_a, e.a);
      entries.push_back(e);
    } catch (const std::exception&) {
      throw ConfigError("Q CSV: malformed row \"" + line + "\"");
    }
  }
  auto q = std::make_shared<TabularQ>(entries.empty() ? 0 : max_s + 1, max_a + 1);
  for (const Entry& e : entries) q->set(e.s, static_cast<ActionId>(e.a), e.v);
  return q;
}

}  // namespace bcts

#endif  // BCTS_VALUE_FN_HPP
