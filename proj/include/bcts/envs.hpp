#ifndef BCTS_ENVS_HPP
#define BCTS_ENVS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcts/env.hpp"

namespace bcts {

/// Environment recipe. Serializes as {"kind": ..., "params": {...}, "seed": ...}.
struct EnvConfig {
  std::string kind;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;

  bool operator==(const EnvConfig&) const = default;
};

inline nlohmann::ordered_json to_json(const EnvConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = c.kind;
  j["params"] = c.params;
  j["seed"] = c.seed;
  return j;
}

template <typename Json>
EnvConfig env_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("env config must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("env config requires a string \"kind\"");
  }
  EnvConfig c;
  c.kind = j.at("kind").template get<std::string>();
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("\"params\" must be an object");
    c.params = nlohmann::ordered_json::parse(j.at("params").dump());
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw ConfigError("\"seed\" must be an integer");
    c.seed = j.at("seed").template get<std::uint64_t>();
  }
  return c;
}

namespace detail {

inline constexpr std::size_t kMaxStates = 100000;

template <typename T>
T param_or(const nlohmann::ordered_json& p, const char* key, T fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("bad type for parameter \"") + key + "\"");
  }
}

inline std::size_t size_param(const nlohmann::ordered_json& p, const char* key,
                              std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
  const auto v = param_or<std::int64_t>(p, key, fallback);
  if (v < lo || v > hi) {
    throw ConfigError(std::string("parameter \"") + key + "\" must lie in [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return static_cast<std::size_t>(v);
}

inline double gamma_param(const nlohmann::ordered_json& p, double fallback) {
  const double g = param_or<double>(p, "gamma", fallback);
  if (!(g > 0.0 && g < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  return g;
}

}  // namespace detail

/// Corridor of length n; action 0 = LEFT, 1 = RIGHT. Entering the right end
/// pays `goal_reward` and terminates.
inline std::shared_ptr<TabularModel> make_chain_grid(std::size_t length, double goal_reward,
                                                     double gamma) {
  if (length < 2 || length > detail::kMaxStates) throw ConfigError("chain-grid: bad length");
  auto m = std::make_shared<TabularModel>("chain-grid", length, 2, gamma);
  for (std::size_t s = 0; s + 1 < length; ++s) {
    m->set_transition(s, 0, s == 0 ? 0 : s - 1, 0.0);
    m->set_transition(s, 1, s + 1, s + 1 == length - 1 ? goal_reward : 0.0);
  }
  m->set_terminal(length - 1);
  m->set_start(0);
  return m;
}

struct ShiftGridParams {
  std::size_t width = 6;
  std::size_t height = 6;
  double step_cost = 0.1;
  double goal_reward = 10.0;
  double off_noise = 1.0;
  double gamma = 0.95;
};

/**
 * Grid world whose optimal route is an L-shaped corridor along the bottom
 * row and up the right column to the goal at (width-1, height-1).
 *
 * Actions: 0 up, 1 down, 2 left, 3 right. Moving into a wall leaves the
 * agent in place. The reward is a property of the cell entered: corridor
 * cells cost `step_cost`, the goal pays `goal_reward`, and every other
 * cell costs step_cost + |N(0, off_noise^2)| with the draw frozen per cell
 * from `seed`. Off-corridor cells are therefore strictly worse than the
 * corridor, and their values vary much more from cell to cell.
 */
inline std::shared_ptr<TabularModel> make_shift_grid(const ShiftGridParams& p,
                                                     std::uint64_t seed) {
  if (p.width < 2 || p.height < 2 || p.width * p.height > detail::kMaxStates) {
    throw ConfigError("shift-grid: bad size");
  }
  if (p.step_cost < 0.0 || p.off_noise < 0.0 || p.goal_reward > 10.0 || p.step_cost > 10.0) {
    throw ConfigError("shift-grid: rewards must satisfy |r| <= 10");
  }
  const std::size_t w = p.width;
  const std::size_t h = p.height;
  auto cell = [w](std::size_t x, std::size_t y) { return y * w + x; };
  auto m = std::make_shared<TabularModel>("shift-grid", w * h, 4, p.gamma);

  std::vector<bool> on_corridor(w * h, false);
  std::vector<StateToken> corridor;
  for (std::size_t x = 0; x < w; ++x) {
    on_corridor[cell(x, 0)] = true;
    corridor.push_back(cell(x, 0));
  }
  for (std::size_t y = 1; y < h; ++y) {
    on_corridor[cell(w - 1, y)] = true;
    corridor.push_back(cell(w - 1, y));
  }
  const std::size_t goal = cell(w - 1, h - 1);

  SplitMix64 rng(hash_combine(seed, 0x5eedULL));
  std::vector<double> entry_reward(w * h);
  for (std::size_t c = 0; c < w * h; ++c) {
    // Box-Muller; one draw per cell keeps the stream layout simple.
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    if (c == goal) {
      entry_reward[c] = p.goal_reward;
    } else if (on_corridor[c]) {
      entry_reward[c] = -p.step_cost;
    } else {
      entry_reward[c] = -std::min(10.0, p.step_cost + std::abs(p.off_noise * z));
    }
  }

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t s = cell(x, y);
      const std::size_t dest[4] = {
          y + 1 < h ? cell(x, y + 1) : s,
          y > 0 ? cell(x, y - 1) : s,
          x > 0 ? cell(x - 1, y) : s,
          x + 1 < w ? cell(x + 1, y) : s,
      };
      for (std::size_t a = 0; a < 4; ++a) m->set_transition(s, a, dest[a], entry_reward[dest[a]]);
    }
  }
  m->set_terminal(goal);
  m->set_start(cell(0, 0));
  m->set_corridor(std::move(corridor));
  return m;
}

/**
 * Combination lock behind a tempting distractor. At the start, action 0
 * pays `distractor_reward` and ends the episode. The goal pays
 * `goal_reward` after exactly `depth` correct actions (each drawn from
 * [1, A) by `seed`); any wrong action ends the episode with nothing.
 *
 * A planner that sees fewer than `depth` steps ahead with zero leaf values
 * prefers the distractor; at `depth` steps the goal becomes visible.
 */
inline std::shared_ptr<TabularModel> make_lookahead_maze(std::size_t depth, std::size_t actions,
                                                         double distractor_reward,
                                                         double goal_reward, double gamma,
                                                         std::uint64_t seed) {
  if (depth < 1 || depth > 64) throw ConfigError("lookahead-maze: depth must lie in [1, 64]");
  if (actions < 2 || actions > 64) throw ConfigError("lookahead-maze: actions must lie in [2, 64]");
  if (std::abs(distractor_reward) > 10.0 || std::abs(goal_reward) > 10.0) {
    throw ConfigError("lookahead-maze: rewards must satisfy |r| <= 10");
  }
  // States: 0..depth-1 lock positions (0 is the start), then goal, fail, distractor.
  const std::size_t goal = depth;
  const std::size_t fail = depth + 1;
  const std::size_t distractor = depth + 2;
  auto m = std::make_shared<TabularModel>("lookahead-maze", depth + 3, actions, gamma);
  SplitMix64 rng(hash_combine(seed, 0x10c4ULL));
  for (std::size_t s = 0; s < depth; ++s) {
    const std::size_t correct = 1 + rng.below(actions - 1);
    for (std::size_t a = 0; a < actions; ++a) {
      if (a == correct) {
        const bool last = s + 1 == depth;
        m->set_transition(s, a, last ? goal : s + 1, last ? goal_reward : 0.0);
      } else if (s == 0 && a == 0) {
        m->set_transition(s, a, distractor, distractor_reward);
      } else {
        m->set_transition(s, a, fail, 0.0);
      }
    }
  }
  m->set_terminal(goal);
  m->set_terminal(fail);
  m->set_terminal(distractor);
  m->set_start(0);
  return m;
}

/// Uniformly random deterministic MDP: successors uniform over all states,
/// rewards uniform in [-1, 1], state 0 is the start and never terminal.
inline std::shared_ptr<TabularModel> make_random_det_mdp(std::size_t states, std::size_t actions,
                                                         double terminal_fraction, double gamma,
                                                         std::uint64_t seed) {
  if (states < 1 || states > detail::kMaxStates) throw ConfigError("random-det-mdp: bad state count");
  if (actions < 2 || actions > 64) throw ConfigError("random-det-mdp: actions must lie in [2, 64]");
  if (!(terminal_fraction >= 0.0 && terminal_fraction < 1.0)) {
    throw ConfigError("random-det-mdp: terminal_fraction must lie in [0, 1)");
  }
  auto m = std::make_shared<TabularModel>("random-det-mdp", states, actions, gamma);
  SplitMix64 rng(hash_combine(seed, 0x3dbULL));
  for (std::size_t s = 0; s < states; ++s) {
    for (std::size_t a = 0; a < actions; ++a) {
      const std::size_t next = rng.below(states);
      m->set_transition(s, a, next, rng.uniform(-1.0, 1.0));
    }
  }
  for (std::size_t s = 1; s < states; ++s) {
    if (rng.uniform() < terminal_fraction) m->set_terminal(s);
  }
  m->set_start(0);
  return m;
}

/**
 * Arithmetic-heavy forward model standing in for a learned dynamics
 * network. A token is expanded into a pseudo-random input vector, pushed
 * with a one-hot action through `layers` tanh layers of width `hidden`,
 * and the output activations are hashed into the successor token.
 *
 * Activations are laid out feature-major ([feature][batch]) so the batched
 * path vectorizes across the batch while every element still sums its
 * inputs in the same order as a batch of one. Batched and single calls are
 * therefore bit-identical.
 */
class DenseNetModel : public ForwardModel {
 public:
  DenseNetModel(std::size_t state_dim, std::size_t hidden, std::size_t layers,
                std::size_t actions, double gamma, std::uint64_t seed)
      : state_dim_(state_dim), hidden_(hidden), actions_(actions), gamma_(gamma), seed_(seed) {
    if (actions < 2) throw ConfigError("dense-net: actions must be at least 2");
    if (state_dim < 1 || hidden < 1 || layers < 1) throw ConfigError("dense-net: bad sizes");
    SplitMix64 rng(hash_combine(seed, 0xde9eULL));
    std::size_t in = state_dim + actions;
    for (std::size_t l = 0; l < layers; ++l) {
      Layer layer{in, hidden, std::vector<double>(in * hidden), std::vector<double>(hidden)};
      const double scale = 1.5 / std::sqrt(static_cast<double>(in));
      for (double& w : layer.weights) w = rng.uniform(-scale, scale);
      for (double& b : layer.bias) b = rng.uniform(-0.1, 0.1);
      layers_.push_back(std::move(layer));
      in = hidden;
    }
  }

  std::string kind() const override { return "dense-net"; }
  std::size_t action_count() const override { return actions_; }
  double gamma() const override { return gamma_; }
  StateToken start_state(std::uint64_t episode_seed = 0) const override {
    return hash_combine(seed_, episode_seed);
  }
  bool is_terminal(StateToken) const override { return false; }

  void step_batch(std::span<const StateToken> states, std::span<const ActionId> actions,
                  std::span<StateToken> next, std::span<double> rewards) const override {
    const std::size_t n = states.size();
    if (actions.size() != n || next.size() != n || rewards.size() != n) {
      throw DomainError("step_batch: span lengths differ");
    }
    for (ActionId a : actions) {
      if (a >= actions_) throw DomainError("step_batch: action index out of range");
    }
    std::vector<double> x((state_dim_ + actions_) * n, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      SplitMix64 rng(states[b]);
      for (std::size_t k = 0; k < state_dim_; ++k) x[k * n + b] = rng.uniform(-1.0, 1.0);
      x[(state_dim_ + actions[b]) * n + b] = 1.0;
    }
    std::vector<double> y;
    for (const Layer& layer : layers_) {
      y.assign(layer.out * n, 0.0);
      for (std::size_t j = 0; j < layer.out; ++j) {
        double* acc = y.data() + j * n;
        for (std::size_t b = 0; b < n; ++b) acc[b] = layer.bias[j];
        const double* w = layer.weights.data() + j * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) {
          const double wk = w[k];
          const double* xk = x.data() + k * n;
          for (std::size_t b = 0; b < n; ++b) acc[b] += wk * xk[b];
        }
        for (std::size_t b = 0; b < n; ++b) acc[b] = std::tanh(acc[b]);
      }
      x.swap(y);
    }
    for (std::size_t b = 0; b < n; ++b) {
      std::uint64_t h = hash_combine(states[b], actions[b]);
      for (std::size_t j = 0; j < hidden_; ++j) {
        // Quantize so the successor depends on the activations, not on the
        // last bits of their rounding.
        h = hash_combine(h, static_cast<std::uint64_t>(
                                std::llround(x[j * n + b] * 1048576.0)));
      }
      next[b] = h;
      rewards[b] = x[b];  // first output unit, in (-1, 1)
    }
  }

 private:
  struct Layer {
    std::size_t in;
    std::size_t out;
    std::vector<double> weights;  // row-major [out][in]
    std::vector<double> bias;
  };

  std::size_t state_dim_;
  std::size_t hidden_;
  std::size_t actions_;
  double gamma_;
  std::uint64_t seed_;
  std::vector<Layer> layers_;
};

/**
 * Builds a model from its recipe. Kinds and parameters (defaults in
 * parentheses):
 *   chain-grid      length (5), goal_reward (1), gamma (0.9)
 *   shift-grid      width (6), height (6), step_cost (0.1), goal_reward (10),
 *                   off_noise (1), gamma (0.95)
 *   lookahead-maze  depth (3), actions (3), distractor_reward (1),
 *                   goal_reward (10), gamma (0.95)
 *   random-det-mdp  states (20), actions (3), terminal_fraction (0), gamma (0.9)
 *   dense-net       state_dim (32), hidden (64), layers (2), actions (2), gamma (0.95)
 * Null params mean all defaults.
 */
inline ModelPtr make_env(const EnvConfig& c) {
  if (c.params.is_null()) return make_env({c.kind, nlohmann::ordered_json::object(), c.seed});
  const auto& p = c.params;
  if (!p.is_object()) throw ConfigError("params must be an object");
  if (c.kind == "chain-grid") {
    return make_chain_grid(detail::size_param(p, "length", 5, 2, detail::kMaxStates),
                           detail::param_or<double>(p, "goal_reward", 1.0),
                           detail::gamma_param(p, 0.9));
  }
  if (c.kind == "shift-grid") {
    ShiftGridParams sp;
    sp.width = detail::size_param(p, "width", 6, 2, 1000);
    sp.height = detail::size_param(p, "height", 6, 2, 1000);
    sp.step_cost = detail::param_or<double>(p, "step_cost", sp.step_cost);
    sp.goal_reward = detail::param_or<double>(p, "goal_reward", sp.goal_reward);
    sp.off_noise = detail::param_or<double>(p, "off_noise", sp.off_noise);
    sp.gamma = detail::gamma_param(p, sp.gamma);
    return make_shift_grid(sp, c.seed);
  }
  if (c.kind == "lookahead-maze") {
    return make_lookahead_maze(detail::size_param(p, "depth", 3, 1, 64),
                               detail::size_param(p, "actions", 3, 2, 64),
                               detail::param_or<double>(p, "distractor_reward", 1.0),
                               detail::param_or<double>(p, "goal_reward", 10.0),
                               detail::gamma_param(p, 0.95), c.seed);
  }
  if (c.kind == "random-det-mdp") {
    return make_random_det_mdp(detail::size_param(p, "states", 20, 1, detail::kMaxStates),
                               detail::size_param(p, "actions", 3, 2, 64),
                               detail::param_or<double>(p, "terminal_fraction", 0.0),
                               detail::gamma_param(p, 0.9), c.seed);
  }
  if (c.kind == "dense-net") {
    return std::make_shared<DenseNetModel>(detail::size_param(p, "state_dim", 32, 1, 4096),
                                           detail::size_param(p, "hidden", 64, 1, 4096),
                                           detail::size_param(p, "layers", 2, 1, 64),
                                           detail::size_param(p, "actions", 2, 2, 64),
                                           detail::gamma_param(p, 0.95), c.seed);
  }
  throw ConfigError("unknown environment kind \"" + c.kind + "\"");
}

}  // namespace bcts

#endif  // BCTS_ENVS_HPP
