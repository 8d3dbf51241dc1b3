#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "bcts/trainer.hpp"

using namespace bcts;

namespace {

TrainConfig load_config(const char* name) {
  std::ifstream in(std::string(BCTS_CONFIG_DIR) + "/" + name);
  REQUIRE(in);
  return train_config_from_json(nlohmann::ordered_json::parse(in));
}

TrainConfig chain_config(std::size_t depth, bool propagated) {
  TrainConfig c;
  c.env = {"chain-grid", {{"length", 6}}, 0};
  c.depth = depth;
  c.epsilon = 1.0;
  c.epsilon_end = 0.0;
  c.budget = 2000;
  c.propagated_value = propagated;
  c.seed = 5;
  return c;
}

std::vector<double> table(const TabularQ& q) { return {q.values().begin(), q.values().end()}; }

}  // namespace

TEST_CASE("budget modes") {
  for (auto m : {BudgetMode::kSteps, BudgetMode::kTransitions, BudgetMode::kWallMs}) {
    CHECK(parse_budget_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_budget_mode("episodes"), ConfigError);
}

TEST_CASE("train config JSON") {
  const auto j = nlohmann::ordered_json::parse(
      R"({"env":{"kind":"chain-grid","params":{"length":5},"seed":0},"depth":2,"lr":0.3,"epsilon":0.2})");
  const auto c = train_config_from_json(j);
  CHECK(c.depth == 2);
  CHECK(c.lr_end == 0.3);
  CHECK(c.epsilon_end == 0.2);
  CHECK_FALSE(c.gamma.has_value());
  CHECK(c.budget_mode == BudgetMode::kSteps);
  const auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());

  CHECK_THROWS_AS(train_config_from_json(nlohmann::ordered_json::parse(R"({"depth":1})")),
                  ConfigError);
  auto bad = j;
  bad["epsilon"] = 1.5;
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  bad = j;
  bad["depth"] = "two";
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  bad = j;
  bad["budget_mode"] = "hours";
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
  bad = j;
  bad["budget"] = 0;
  CHECK_THROWS_AS(train_config_from_json(bad), ConfigError);
}

TEST_CASE("shipped train configs load") {
  const auto maze = load_config("train_maze.json");
  CHECK(maze.depth == 3);
  CHECK(maze.budget_mode == BudgetMode::kTransitions);
  const auto chain = load_config("train_chain.json");
  CHECK(chain.propagated_value);
  CHECK(chain.epsilon_end == 0.0);
}

TEST_CASE("training is a pure function of the config") {
  const auto c = chain_config(2, false);
  const auto a = train(c);
  const auto b = train(c);
  CHECK(table(*a.q) == table(*b.q));
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].step == b.curve[i].step);
    CHECK(a.curve[i].transitions == b.curve[i].transitions);
    CHECK(a.curve[i].episode_return == b.curve[i].episode_return);
    CHECK(a.curve[i].wall_ms == 0.0);
  }
  auto other = c;
  other.seed = 6;
  CHECK(table(*train(other).q) != table(*a.q));
}

TEST_CASE("budget accounting") {
  auto c = chain_config(2, false);
  c.budget_mode = BudgetMode::kTransitions;
  c.budget = 500;
  const auto r = train(c);
  const std::uint64_t used = r.env_steps + r.plan_transitions;
  CHECK(used >= 500);
  // Each step costs one environment step plus a depth-2 tree.
  CHECK(used < 500 + 1 + tree_transitions(2, 2));
  CHECK(r.curve.back().transitions == used);

  auto greedy = chain_config(0, false);
  greedy.budget = 300;
  const auto g = train(greedy);
  CHECK(g.env_steps == 300);
  CHECK(g.plan_transitions == 0);
  CHECK(g.curve.back().step == 300);
}

TEST_CASE("one-step propagated target equals the plain target") {
  const auto plain = train(chain_config(1, false));
  const auto propagated = train(chain_config(1, true));
  CHECK(table(*plain.q) == table(*propagated.q));
}

TEST_CASE("chain training converges to the optimal Q") {
  for (bool propagated : {false, true}) {
    for (std::size_t d : {0u, 1u, 2u}) {
      INFO("propagated=" << propagated << " depth=" << d);
      const auto c = chain_config(d, propagated);
      const auto r = train(c);
      auto model = make_env(c.env);
      const auto exact = dp_exact_q(*model, model->gamma(), 1e-12);
      for (StateToken s = 0; s + 1 < 6; ++s) {
        for (ActionId a = 0; a < 2; ++a) {
          CHECK(r.q->at(s, a) == Catch::Approx(exact->at(s, a)).margin(1e-6));
        }
      }
      const auto e = evaluate(*model, *r.q, PolicySpec{d}, 10, 1, 50);
      CHECK(e.median == 1.0);
    }
  }
}

TEST_CASE("training needs an enumerable model") {
  TrainConfig c;
  c.env = {"dense-net", nlohmann::ordered_json::object(), 0};
  CHECK_THROWS_AS(train(c), UnsupportedError);
  auto chain = make_env({"chain-grid", {{"length", 4}}, 0});
  CHECK(table_size(*chain) == 4);
}

TEST_CASE("curve CSV") {
  std::vector<CurvePoint> curve = {{10, 0.0, 40, 1.0}, {20, 0.0, 80, -0.5}};
  std::ostringstream os;
  write_curve_csv(os, curve);
  CHECK(os.str() == "step,wall_ms,transitions,episode_return\n10,0.000,40,1\n20,0.000,80,-0.5\n");
}

TEST_CASE("quantiles and summaries") {
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  CHECK(quantile_sorted(xs, 0.25) == 1.75);
  CHECK(quantile_sorted(xs, 0.5) == 2.5);
  CHECK(quantile_sorted(xs, 1.0) == 4.0);
  CHECK(quantile_sorted(xs, 0.0) == 1.0);
  CHECK_THROWS_AS(quantile_sorted(std::span<const double>{}, 0.5), DomainError);
  const auto e = summarize_returns({4.0, 1.0, 3.0, 2.0, 10.0}, 9);
  CHECK(e.median == 3.0);
  CHECK(e.q25 == 2.0);
  CHECK(e.q75 == 4.0);
  CHECK(e.mean == 4.0);
  CHECK(e.episodes == 5);
  CHECK(to_json(e).dump() ==
        R"({"median":3.0,"q25":2.0,"q75":4.0,"mean":4.0,"episodes":5,"seed":9})");
}

TEST_CASE("evaluation with the exact oracle") {
  auto grid = make_env({"shift-grid", nlohmann::ordered_json::object(), 3});
  const auto exact = dp_exact_q(*grid, grid->gamma(), 1e-10);
  for (std::size_t d : {0u, 1u, 2u}) {
    const auto e = evaluate(*grid, *exact, PolicySpec{d}, 5, 2);
    CHECK(e.median == Catch::Approx(9.1));
    CHECK(e.q25 == e.q75);
  }
  const auto b = evaluate(*grid, *exact, PolicySpec{2, true, 1.0}, 5, 2);
  CHECK(b.median == Catch::Approx(9.1));
  CHECK_THROWS_AS(evaluate(*grid, *exact, PolicySpec{}, 0, 2), ConfigError);
}

TEST_CASE("noisy evaluation reseeds per episode") {
  auto grid = make_env({"shift-grid", nlohmann::ordered_json::object(), 3});
  const auto exact = dp_exact_q(*grid, grid->gamma(), 1e-10);
  const NoisyQ noisy(exact, {0.1, 0.4, 1});
  const auto a = episode_returns(*grid, noisy, PolicySpec{1}, 20, 4);
  const auto b = episode_returns(*grid, noisy, PolicySpec{1}, 20, 4);
  CHECK(a == b);
}

TEST_CASE("degradation experiment layout") {
  auto grid = make_env({"shift-grid", nlohmann::ordered_json::object(), 3});
  DegradeOptions o;
  o.depths = {1, 2};
  o.c_values = {0.5, 1.0};
  o.episodes = 20;
  o.seed = 1;
  const auto rows = degradation_experiment(*grid, {0.1, 0.4, 0}, o);
  REQUIRE(rows.size() == 1 + 2 * 3);
  CHECK(rows[0].policy == "base");
  CHECK(rows[0].depth == 0);
  CHECK(rows[1].policy == "vanilla");
  CHECK(rows[2].policy == "bcts");
  CHECK(rows[2].c == 0.5);
  CHECK(rows[6].depth == 2);
  for (const auto& r : rows) CHECK(r.summary.episodes == 20);
  // The base policy follows the corridor.
  CHECK(rows[0].summary.median == Catch::Approx(9.1));
  // Vanilla search is drawn off the corridor; BCTS is not.
  CHECK(rows[1].summary.median < rows[0].summary.median);
  CHECK(rows[3].summary.median == Catch::Approx(9.1));

  std::ostringstream os;
  write_degrade_csv(os, std::span<const DegradeRow>(rows.data(), 1));
  CHECK(os.str().rfind("depth,policy,c,median,q25,q75\n0,base,0,", 0) == 0);
}

TEST_CASE("exact-oracle maze return does not fall with depth") {
  auto maze = make_env({"lookahead-maze", {{"depth", 3}, {"actions", 3}}, 11});
  const auto exact = dp_exact_q(*maze, maze->gamma(), 1e-12);
  ConstantQ zero(3, 0.0);
  double prev = -1e9;
  for (std::size_t d = 1; d <= 3; ++d) {
    const double ret = evaluate(*maze, zero, PolicySpec{d}, 1, 0).median;
    CHECK(ret >= prev);
    prev = ret;
    CHECK(evaluate(*maze, *exact, PolicySpec{d}, 1, 0).median == 10.0);
  }
  CHECK(prev == 10.0);
}
