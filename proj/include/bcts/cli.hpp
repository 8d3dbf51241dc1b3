#ifndef BCTS_CLI_HPP
#define BCTS_CLI_HPP

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcts/bench.hpp"
#include "bcts/envs.hpp"
#include "bcts/search.hpp"
#include "bcts/theory_lab.hpp"
#include "bcts/trainer.hpp"
#include "bcts/value_fn.hpp"

namespace bcts {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheckFailed = 3;

namespace cli {

/// A JSON document given inline (starting with '{') or as a file path.
inline nlohmann::ordered_json load_json(const std::string& arg) {
  std::string text = arg;
  if (arg.empty() || arg.front() != '{') {
    std::ifstream in(arg);
    if (!in) throw ConfigError("cannot open \"" + arg + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in \"" + arg + "\": " + e.what());
  }
}

/// "1:6" (inclusive range) or "1,2,4".
inline std::vector<std::size_t> parse_depths(const std::string& s) {
  std::vector<std::size_t> out;
  try {
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const std::size_t lo = std::stoul(s.substr(0, colon));
      const std::size_t hi = std::stoul(s.substr(colon + 1));
      if (lo > hi) throw ConfigError("empty depth range \"" + s + "\"");
      for (std::size_t d = lo; d <= hi; ++d) out.push_back(d);
    } else {
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("bad depth list \"" + s + "\"");
  }
  if (out.empty()) throw ConfigError("empty depth list");
  return out;
}

struct QfnArgs {
  std::string kind = "auto";  // auto, exact, zero, or csv:<path>
  double sigma_o = 0.0;
  double sigma_e = 0.0;
  std::uint64_t noise_seed = 0;
};

inline QPtr make_qfn(const QfnArgs& a, const ForwardModel& model, double gamma) {
  QPtr base;
  if (a.kind == "zero" || (a.kind == "auto" && !model.enumerable())) {
    base = std::make_shared<ConstantQ>(model.action_count(), 0.0);
  } else if (a.kind == "exact" || a.kind == "auto") {
    base = dp_exact_q(model, gamma, 1e-10);
  } else if (a.kind.rfind("csv:", 0) == 0) {
    std::ifstream in(a.kind.substr(4));
    if (!in) throw ConfigError("cannot open Q CSV \"" + a.kind.substr(4) + "\"");
    base = read_q_csv(in);
  } else {
    throw ConfigError("--qfn must be auto, exact, zero or csv:<path>");
  }
  if (a.sigma_o == 0.0 && a.sigma_e == 0.0) return base;
  return std::make_shared<NoisyQ>(base, NoiseSpec{a.sigma_o, a.sigma_e, a.noise_seed});
}

inline void add_qfn_options(CLI::App* app, QfnArgs& a) {
  app->add_option("--qfn", a.kind, "Value function: auto, exact, zero or csv:<path>");
  app->add_option("--sigma-o", a.sigma_o, "On-policy leaf noise");
  app->add_option("--sigma-e", a.sigma_e, "Off-policy leaf noise");
  app->add_option("--noise-seed", a.noise_seed, "Noise seed");
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write \"" + path + "\"");
  f << text;
}

}  // namespace cli

/**
 * Command-line entry point. Subcommands: plan, train, verify, sweep, bench,
 * degrade. Returns 0 on success, 2 on usage or configuration errors and 3
 * when a verification or benchmark check fails.
 */
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Batched tree search with Bellman-corrected bias", "bcts"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // plan
  auto* plan = app.add_subcommand("plan", "Plan one action and print the result as JSON");
  std::string plan_env;
  std::size_t plan_depth = 1;
  std::optional<StateToken> plan_root;
  std::optional<double> plan_gamma;
  bool plan_bcts = false, plan_clamp = false;
  double plan_c = 1.0;
  std::string plan_method = "bfs-batch";
  std::uint64_t plan_budget = kDefaultNodeBudget;
  cli::QfnArgs plan_q;
  plan->add_option("--env", plan_env, "Environment config (file or inline JSON)")->required();
  plan->add_option("--depth", plan_depth, "Search depth (0 = greedy)");
  plan->add_option("--root", plan_root, "Root state token (default: start state)");
  plan->add_option("--gamma", plan_gamma, "Discount (default: the environment's)");
  plan->add_flag("--bcts", plan_bcts, "Apply the Bellman correction");
  plan->add_option("--c", plan_c, "Correction constant");
  plan->add_flag("--clamp", plan_clamp, "Clamp negative corrections at zero");
  plan->add_option("--method", plan_method, "dfs, bfs-seq or bfs-batch");
  plan->add_option("--node-budget", plan_budget, "Maximum leaf count");
  cli::add_qfn_options(plan, plan_q);

  // train
  auto* tr = app.add_subcommand("train", "Tabular Q-learning; prints the learning curve as CSV");
  std::string tr_config, tr_eval_out, tr_q_out;
  std::optional<std::size_t> tr_depth;
  std::optional<std::uint64_t> tr_seed;
  std::optional<double> tr_budget;
  std::optional<bool> tr_prop;
  bool tr_timing = false;
  tr->add_option("--config", tr_config, "Training config (file or inline JSON)")->required();
  tr->add_option("--depth", tr_depth, "Override search depth");
  tr->add_option("--seed", tr_seed, "Override seed");
  tr->add_option("--budget", tr_budget, "Override budget");
  tr->add_option("--propagated-value", tr_prop, "Override the propagated-value flag (true/false)");
  tr->add_flag("--timing", tr_timing, "Record wall time in the curve");
  tr->add_option("--eval-out", tr_eval_out, "Write the evaluation summary JSON here");
  tr->add_option("--q-out", tr_q_out, "Write the learned Q table CSV here");

  // verify
  auto* ver = app.add_subcommand("verify", "Run theory checks; prints JSONL reports");
  std::string ver_suite = "all";
  VerifyOptions ver_opt;
  ver->add_option("--suite", ver_suite, "all or one suite name");
  ver->add_option("--trials", ver_opt.trials, "Monte-Carlo trials per check");
  ver->add_option("--seed", ver_opt.seed, "Seed");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Exact vs approximate bias gap over depth (CSV)");
  std::size_t sw_actions = 3;
  double sw_so = 1.0, sw_se = 4.0;
  std::string sw_depths = "1:12";
  sw->add_option("--actions", sw_actions, "Action count A");
  sw->add_option("--sigma-o", sw_so, "On-policy noise");
  sw->add_option("--sigma-e", sw_se, "Off-policy noise");
  sw->add_option("--depths", sw_depths, "Depth range lo:hi within [1, 16]");

  // bench
  auto* be = app.add_subcommand("bench", "Time dfs, bfs-seq and bfs-batch planners (CSV)");
  std::string be_env, be_depths = "1:4";
  BenchOptions be_opt;
  bool be_no_timing = false;
  cli::QfnArgs be_q;
  be->add_option("--env", be_env, "Environment config (file or inline JSON)")->required();
  be->add_option("--depths", be_depths, "Depths, lo:hi or a comma list");
  be->add_option("--repeats", be_opt.repeats, "Timed repeats per cell");
  be->add_option("--methods", be_opt.methods, "Subset of dfs, bfs-seq, bfs-batch")->delimiter(',');
  be->add_option("--node-budget", be_opt.node_budget, "Maximum leaf count");
  be->add_flag("--no-timing", be_no_timing, "Skip timing; wall_ms is written as 0");
  cli::add_qfn_options(be, be_q);

  // degrade
  auto* dg = app.add_subcommand("degrade", "Base vs vanilla vs corrected search on shift-grid (CSV)");
  std::string dg_env, dg_depths = "1:3";
  NoiseSpec dg_noise{0.1, 0.4, 0};
  DegradeOptions dg_opt;
  dg_opt.c_values = {0.25, 0.5, 1.0, 2.0, 4.0};
  dg->add_option("--env", dg_env, "shift-grid config (file or inline JSON)")->required();
  dg->add_option("--sigma-o", dg_noise.sigma_o, "On-policy noise");
  dg->add_option("--sigma-e", dg_noise.sigma_e, "Off-policy noise");
  dg->add_option("--noise-seed", dg_noise.seed, "Noise seed");
  dg->add_option("--depths", dg_depths, "Depths, lo:hi or a comma list");
  dg->add_option("--c", dg_opt.c_values, "Correction constants")->delimiter(',');
  dg->add_option("--episodes", dg_opt.episodes, "Evaluation episodes");
  dg->add_option("--seed", dg_opt.seed, "Evaluation seed");
  dg->add_option("--max-steps", dg_opt.max_steps, "Episode step cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*plan) {
      const auto model = make_env(env_config_from_json(cli::load_json(plan_env)));
      const double gamma = plan_gamma.value_or(model->gamma());
      const auto q = cli::make_qfn(plan_q, *model, gamma);
      const StateToken root = plan_root.value_or(model->start_state());
      if (plan_depth == 0) {
        nlohmann::ordered_json j;
        j["action"] = greedy_action(*q, root);
        j["root_q"] = q->row(root);
        j["depth"] = 0;
        j["leaves"] = 1;
        j["batched_calls"] = 0;
        j["transitions"] = 0;
        out << j.dump() << '\n';
        return kExitOk;
      }
      std::optional<PenaltySpec> penalty;
      if (plan_bcts) {
        penalty = make_penalty_spec(*model, *q, root, plan_depth, gamma, plan_c, plan_clamp);
      }
      PlanResult r;
      if (plan_method == "bfs-batch") {
        r = batch_bfs_plan(*model, *q, root, plan_depth, gamma, penalty, plan_budget);
      } else if (plan_method == "bfs-seq") {
        r = bfs_seq_plan(*model, *q, root, plan_depth, gamma, penalty, plan_budget);
      } else if (plan_method == "dfs") {
        r = dfs_plan(*model, *q, root, plan_depth, gamma, penalty, plan_budget);
      } else {
        throw ConfigError("--method must be dfs, bfs-seq or bfs-batch");
      }
      out << to_json(r).dump() << '\n';
      return kExitOk;
    }

    if (*tr) {
      TrainConfig cfg = train_config_from_json(cli::load_json(tr_config));
      if (tr_depth) cfg.depth = *tr_depth;
      if (tr_seed) cfg.seed = *tr_seed;
      if (tr_budget) cfg.budget = *tr_budget;
      if (tr_prop) cfg.propagated_value = *tr_prop;
      if (tr_timing) cfg.record_wall_time = true;
      const auto model = make_env(cfg.env);
      const auto res = train(cfg, model);
      write_curve_csv(out, res.curve);
      if (!tr_eval_out.empty()) {
        const auto summary = evaluate(*model, *res.q, PolicySpec{cfg.depth}, cfg.eval_episodes,
                                      hash_combine(cfg.seed, 0xe7a1), cfg.max_episode_steps);
        cli::write_file(tr_eval_out, to_json(summary).dump() + "\n");
      }
      if (!tr_q_out.empty()) {
        std::ostringstream os;
        write_q_csv(os, *res.q);
        cli::write_file(tr_q_out, os.str());
      }
      return kExitOk;
    }

    if (*ver) {
      bool ok = true;
      for (const auto& r : run_verify_suite(ver_suite, ver_opt)) {
        out << to_json(r).dump() << '\n';
        ok = ok && r.pass;
      }
      return ok ? kExitOk : kExitCheckFailed;
    }

    if (*sw) {
      const auto d = cli::parse_depths(sw_depths);
      write_sweep_csv(out, approximation_sweep(sw_actions, sw_so, sw_se, d.front(), d.back()));
      return kExitOk;
    }

    if (*be) {
      const auto model = make_env(env_config_from_json(cli::load_json(be_env)));
      const auto q = cli::make_qfn(be_q, *model, model->gamma());
      be_opt.depths = cli::parse_depths(be_depths);
      be_opt.timing = !be_no_timing;
      for (const auto& m : be_opt.methods) {
        const auto& known = bench_methods();
        if (std::find(known.begin(), known.end(), m) == known.end()) {
          throw ConfigError("unknown bench method \"" + m + "\"");
        }
      }
      const auto rep = bench_search(*model, *q, model->start_state(), model->gamma(), be_opt);
      write_bench_csv(out, rep.records);
      for (const auto& s : rep.skipped) err << "skipped " << s << '\n';
      for (const auto& v : rep.violations) err << "violation " << v << '\n';
      return rep.violations.empty() ? kExitOk : kExitCheckFailed;
    }

    if (*dg) {
      const auto model = make_env(env_config_from_json(cli::load_json(dg_env)));
      if (model->kind() != "shift-grid") throw ConfigError("degrade needs a shift-grid environment");
      dg_opt.depths = cli::parse_depths(dg_depths);
      write_degrade_csv(out, degradation_experiment(*model, dg_noise, dg_opt));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace bcts

#endif  // BCTS_CLI_HPP
