#ifndef BCTS_TRAINER_HPP
#define BCTS_TRAINER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcts/envs.hpp"
#include "bcts/search.hpp"
#include "bcts/value_fn.hpp"

namespace bcts {

enum class BudgetMode { kSteps, kTransitions, kWallMs };

inline BudgetMode parse_budget_mode(const std::string& s) {
  if (s == "steps") return BudgetMode::kSteps;
  if (s == "transitions") return BudgetMode::kTransitions;
  if (s == "wall_ms") return BudgetMode::kWallMs;
  throw ConfigError("budget_mode must be steps, transitions or wall_ms");
}

inline const char* to_string(BudgetMode m) {
  switch (m) {
    case BudgetMode::kSteps: return "steps";
    case BudgetMode::kTransitions: return "transitions";
    case BudgetMode::kWallMs: return "wall_ms";
  }
  return "steps";
}

/**
 * Tabular Q-learning run. Learning rate and epsilon move linearly from
 * their start to their end values over the budget. In transitions mode the
 * budget covers environment steps plus every transition the planner
 * expands.
 */
struct TrainConfig {
  EnvConfig env;
  std::size_t depth = 0;
  std::optional<double> gamma;  // defaults to the environment's
  double lr = 0.5, lr_end = 0.5;
  double epsilon = 0.1, epsilon_end = 0.1;
  BudgetMode budget_mode = BudgetMode::kSteps;
  double budget = 10000;
  bool propagated_value = false;
  std::uint64_t seed = 0;
  std::size_t eval_episodes = 200;
  std::size_t max_episode_steps = 100;
  double q_init = 0.0;
  bool record_wall_time = false;

  void validate() const {
    if (!(budget > 0.0)) throw ConfigError("train: budget must be positive");
    for (double e : {epsilon, epsilon_end}) {
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("train: epsilon must lie in [0, 1]");
    }
    for (double a : {lr, lr_end}) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("train: learning rate must lie in [0, 1]");
    }
    if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) throw ConfigError("train: gamma must lie in (0, 1)");
    if (eval_episodes < 1) throw ConfigError("train: eval_episodes must be >= 1");
    if (max_episode_steps < 1) throw ConfigError("train: max_episode_steps must be >= 1");
  }
};

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["env"] = to_json(c.env);
  j["depth"] = c.depth;
  if (c.gamma) j["gamma"] = *c.gamma;
  j["lr"] = c.lr;
  j["lr_end"] = c.lr_end;
  j["epsilon"] = c.epsilon;
  j["epsilon_end"] = c.epsilon_end;
  j["budget_mode"] = to_string(c.budget_mode);
  j["budget"] = c.budget;
  j["propagated_value"] = c.propagated_value;
  j["seed"] = c.seed;
  j["eval_episodes"] = c.eval_episodes;
  j["max_episode_steps"] = c.max_episode_steps;
  j["q_init"] = c.q_init;
  j["record_wall_time"] = c.record_wall_time;
  return j;
}

template <class Json>
TrainConfig train_config_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("env")) throw ConfigError("train config needs an \"env\" object");
  TrainConfig c;
  try {
    c.env = env_config_from_json(j.at("env"));
    c.depth = j.value("depth", c.depth);
    if (j.contains("gamma") && !j.at("gamma").is_null()) c.gamma = j.at("gamma").template get<double>();
    c.lr = j.value("lr", c.lr);
    c.lr_end = j.value("lr_end", c.lr);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.epsilon_end = j.value("epsilon_end", c.epsilon);
    c.budget_mode = parse_budget_mode(j.value("budget_mode", std::string("steps")));
    c.budget = j.value("budget", c.budget);
    c.propagated_value = j.value("propagated_value", c.propagated_value);
    c.seed = j.value("seed", c.seed);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.max_episode_steps = j.value("max_episode_steps", c.max_episode_steps);
    c.q_init = j.value("q_init", c.q_init);
    c.record_wall_time = j.value("record_wall_time", c.record_wall_time);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

struct CurvePoint {
  std::uint64_t step = 0;  // environment steps so far
  double wall_ms = 0.0;
  std::uint64_t transitions = 0;  // environment steps + planner transitions
  double episode_return = 0.0;
};

struct TrainResult {
  std::shared_ptr<TabularQ> q;
  std::vector<CurvePoint> curve;
  std::uint64_t env_steps = 0;
  std::uint64_t plan_transitions = 0;
};

inline void write_curve_csv(std::ostream& os, std::span<const CurvePoint> curve) {
  os << "step,wall_ms,transitions,episode_return\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%llu,%.3f,%llu,%.17g\n",
                  static_cast<unsigned long long>(p.step), p.wall_ms,
                  static_cast<unsigned long long>(p.transitions), p.episode_return);
    os << buf;
  }
}

/// Dense table size for an enumerable model (largest token + 1).
inline std::size_t table_size(const ForwardModel& model) {
  if (!model.enumerable()) throw UnsupportedError("tabular training needs an enumerable model");
  StateToken max_token = 0;
  for (StateToken s : model.enumerate_states()) max_token = std::max(max_token, s);
  return static_cast<std::size_t>(max_token) + 1;
}

namespace detail {
inline double lerp(double a, double b, double t) { return a + (b - a) * std::clamp(t, 0.0, 1.0); }
}  // namespace detail

/**
 * Online tabular Q-learning with tree-search action selection. Behaviour
 * actions come from batch_bfs_plan at `depth` (greedy_action at depth 0),
 * with epsilon-random root actions. The target is r + gamma max Q(s', .),
 * or with propagated_value the plan's d-step value of the taken action.
 * Runs in steps or transitions mode are a pure function of the config.
 */
inline TrainResult train(const TrainConfig& cfg, ModelPtr model = nullptr) {
  cfg.validate();
  if (!model) model = make_env(cfg.env);
  const ForwardModel& env = *model;
  const double gamma = cfg.gamma.value_or(env.gamma());
  const std::size_t actions = env.action_count();

  TrainResult res;
  res.q = std::make_shared<TabularQ>(table_size(env), actions, cfg.q_init);
  TabularQ& q = *res.q;
  SplitMix64 rng(hash_combine(cfg.seed, 0x7472616e));

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  auto used = [&]() -> double {
    switch (cfg.budget_mode) {
      case BudgetMode::kSteps: return static_cast<double>(res.env_steps);
      case BudgetMode::kTransitions:
        return static_cast<double>(res.env_steps + res.plan_transitions);
      case BudgetMode::kWallMs: return elapsed_ms();
    }
    return 0.0;
  };

  for (std::uint64_t episode = 0; used() < cfg.budget; ++episode) {
    StateToken s = env.start_state(hash_combine(cfg.seed, episode));
    double ret = 0.0;
    for (std::size_t t = 0; t < cfg.max_episode_steps && !env.is_terminal(s); ++t) {
      const double frac = used() / cfg.budget;
      const double eps = detail::lerp(cfg.epsilon, cfg.epsilon_end, frac);
      const double lr = detail::lerp(cfg.lr, cfg.lr_end, frac);

      std::optional<PlanResult> plan;
      ActionId a;
      if (cfg.depth == 0) {
        a = greedy_action(q, s);
      } else {
        plan = batch_bfs_plan(env, q, s, cfg.depth, gamma);
        res.plan_transitions += plan->transitions;
        a = plan->chosen_action;
      }
      if (eps > 0.0 && rng.uniform() < eps) a = static_cast<ActionId>(rng.below(actions));

      const auto [next, reward] = env.step(s, a);
      ++res.env_steps;
      const double target = cfg.propagated_value && plan
                                ? plan->raw_q[a]
                                : reward + gamma * bootstrap_value(env, q, next);
      const double old = q.at(s, a);
      q.set(s, a, old + lr * (target - old));
      ret += reward;
      s = next;
      if (used() >= cfg.budget) break;
    }
    res.curve.push_back({res.env_steps, cfg.record_wall_time ? elapsed_ms() : 0.0,
                         res.env_steps + res.plan_transitions, ret});
  }
  return res;
}

/// Action selection used during evaluation.
struct PolicySpec {
  std::size_t depth = 0;
  bool penalty = false;  // BCTS correction
  double c = 1.0;
  bool clamp_penalty_at_zero = false;
};

struct EvalSummary {
  double median = 0.0, q25 = 0.0, q75 = 0.0, mean = 0.0;
  std::size_t episodes = 0;
  std::uint64_t seed = 0;
};

inline nlohmann::ordered_json to_json(const EvalSummary& e) {
  nlohmann::ordered_json j;
  j["median"] = e.median;
  j["q25"] = e.q25;
  j["q75"] = e.q75;
  j["mean"] = e.mean;
  j["episodes"] = e.episodes;
  j["seed"] = e.seed;
  return j;
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline EvalSummary summarize_returns(std::vector<double> returns, std::uint64_t seed) {
  std::sort(returns.begin(), returns.end());
  EvalSummary e;
  e.episodes = returns.size();
  e.seed = seed;
  e.q25 = quantile_sorted(returns, 0.25);
  e.median = quantile_sorted(returns, 0.5);
  e.q75 = quantile_sorted(returns, 0.75);
  KahanSum sum;
  for (double r : returns) sum.add(r);
  e.mean = sum.value() / static_cast<double>(returns.size());
  return e;
}

/// One policy decision at `s`.
inline ActionId select_action(const ForwardModel& model, const QFunction& q, StateToken s,
                              const PolicySpec& policy, double gamma) {
  if (policy.depth == 0) return greedy_action(q, s);
  if (policy.penalty) {
    return bcts_plan(model, q, s, policy.depth, gamma, policy.c, policy.clamp_penalty_at_zero)
        .chosen_action;
  }
  return batch_bfs_plan(model, q, s, policy.depth, gamma).chosen_action;
}

/// Undiscounted returns of `episodes` runs. Episode i reseeds the value
/// function and the start state with hash(seed, i).
inline std::vector<double> episode_returns(const ForwardModel& model, const QFunction& q,
                                           const PolicySpec& policy, std::size_t episodes,
                                           std::uint64_t seed, std::size_t max_steps = 100) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  const double gamma = model.gamma();
  std::vector<double> returns;
  returns.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    const std::uint64_t ep_seed = hash_combine(seed, i);
    const auto reseeded = q.reseeded(ep_seed);
    const QFunction& qi = reseeded ? *reseeded : q;
    StateToken s = model.start_state(ep_seed);
    double ret = 0.0;
    for (std::size_t t = 0; t < max_steps && !model.is_terminal(s); ++t) {
      const auto [next, reward] = model.step(s, select_action(model, qi, s, policy, gamma));
      ret += reward;
      s = next;
    }
    returns.push_back(ret);
  }
  return returns;
}

inline EvalSummary evaluate(const ForwardModel& model, const QFunction& q, const PolicySpec& policy,
                            std::size_t episodes, std::uint64_t seed, std::size_t max_steps = 100) {
  return summarize_returns(episode_returns(model, q, policy, episodes, seed, max_steps), seed);
}

struct DegradeRow {
  std::size_t depth = 0;
  std::string policy;  // base, vanilla or bcts
  double c = 0.0;
  EvalSummary summary;
};

inline void write_degrade_csv(std::ostream& os, std::span<const DegradeRow> rows) {
  os << "depth,policy,c,median,q25,q75\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%.17g,%.17g\n", r.depth, r.policy.c_str(),
                  r.c, r.summary.median, r.summary.q25, r.summary.q75);
    os << buf;
  }
}

struct DegradeOptions {
  std::vector<std::size_t> depths = {1, 2, 3};
  std::vector<double> c_values = {1.0};
  std::size_t episodes = 200;
  std::uint64_t seed = 0;
  std::size_t max_steps = 100;
  double dp_tolerance = 1e-10;
};

/**
 * Exact-DP oracle wrapped with on/off-policy noise, evaluated as the base
 * policy (depth 0), vanilla tree search and BCTS for every depth and c.
 */
inline std::vector<DegradeRow> degradation_experiment(const ForwardModel& model,
                                                      const NoiseSpec& noise,
                                                      const DegradeOptions& opt) {
  const auto oracle = dp_exact_q(model, model.gamma(), opt.dp_tolerance);
  const NoisyQ noisy(oracle, noise);
  std::vector<DegradeRow> rows;
  auto run = [&](std::size_t d, const char* name, double c, const PolicySpec& p) {
    rows.push_back({d, name, c, evaluate(model, noisy, p, opt.episodes, opt.seed, opt.max_steps)});
  };
  run(0, "base", 0.0, PolicySpec{0, false, 0.0});
  for (std::size_t d : opt.depths) {
    if (d == 0) continue;
    run(d, "vanilla", 0.0, PolicySpec{d, false, 0.0});
    for (double c : opt.c_values) run(d, "bcts", c, PolicySpec{d, true, c});
  }
  return rows;
}

}  // namespace bcts

#endif  // BCTS_TRAINER_HPP
