// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bcts/bcts.hpp"
#include "bcts/cli.hpp"

using namespace bcts;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string config(const char* name) { return std::string(BCTS_CONFIG_DIR) + "/" + name; }

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t count_failed(const std::vector<VerificationReport>& reps, const std::string& prefix,
                         std::size_t* total = nullptr) {
  std::size_t n = 0, bad = 0;
  for (const auto& r : reps) {
    if (r.check.rfind(prefix, 0) != 0) continue;
    ++n;
    if (!r.pass) {
      ++bad;
      std::fprintf(stderr, "  failed %s: theory=%.6g empirical=%.6g se=%.3g\n", r.check.c_str(),
                   r.theory, r.empirical, r.se);
    }
  }
  if (total) *total = n;
  return bad;
}

Outcome search_equivalence() {
  std::size_t instances = 0, plans = 0, mismatches = 0;
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 60; ++inst) {
    const std::size_t actions = 2 + inst % 3;
    const std::size_t states = 2 + (inst * 13) % 49;
    const double gamma = 0.75 + 0.004 * static_cast<double>(inst);
    auto m = make_random_det_mdp(states, actions, 0.1, gamma, 1000 + inst);
    TabularQ q(states, actions);
    SplitMix64 rng(2000 + inst);
    for (std::size_t s = 0; s < states; ++s) {
      for (ActionId a = 0; a < actions; ++a) q.set(s, a, rng.uniform(-5.0, 5.0));
    }
    ++instances;
    for (StateToken root : {m->start_state(), static_cast<StateToken>(rng.below(states))}) {
      for (std::size_t d = 1; d <= 5; ++d) {
        const auto b = batch_bfs_plan(*m, q, root, d, gamma);
        const auto f = dfs_plan(*m, q, root, d, gamma);
        ++plans;
        if (b.chosen_action != f.chosen_action) ++mismatches;
        for (std::size_t a = 0; a < actions; ++a) {
          worst = std::max(worst, std::abs(b.root_q[a] - f.root_q[a]));
        }
      }
    }
  }
  return {mismatches == 0 && worst <= 1e-9,
          fmt("%zu MDPs, %zu plans, action mismatches=%zu, max |dQ|=%.2e", instances, plans,
              mismatches, worst)};
}

Outcome invocation_contract() {
  std::size_t records = 0, violations = 0, skipped = 0;
  std::string soft;
  for (const char* name : {"random20x3.json", "chain.json", "maze.json", "densenet.json"}) {
    std::ifstream in(config(name));
    const auto model = make_env(env_config_from_json(nlohmann::ordered_json::parse(in)));
    const auto q = model->enumerable() ? QPtr(dp_exact_q(*model, model->gamma(), 1e-10))
                                       : QPtr(std::make_shared<ConstantQ>(model->action_count(), 0.0));
    BenchOptions o;
    o.depths = {1, 2, 3, 4, 5, 6};
    o.repeats = 3;
    const auto rep = bench_search(*model, *q, model->start_state(), model->gamma(), o);
    records += rep.records.size();
    violations += rep.violations.size();
    skipped += rep.skipped.size();
    for (const auto& v : rep.violations) std::fprintf(stderr, "  %s: %s\n", name, v.c_str());
    if (std::string(name) == "densenet.json") {
      double batch = 0.0, dfs = 0.0;
      for (const auto& r : rep.records) {
        if (r.depth != 6) continue;
        if (r.method == "bfs-batch") batch = r.wall_ms;
        if (r.method == "dfs") dfs = r.wall_ms;
      }
      soft = fmt("; dense-net d=6 bfs-batch %.3f ms vs dfs %.3f ms", batch, dfs);
    }
  }
  return {violations == 0 && records == 72,
          fmt("%zu records, %zu violations, %zu skipped", records, violations, skipped) + soft};
}

Outcome gumbel_numerics() {
  std::size_t bad = 0;
  std::string detail;
  for (double n : {10.0, 64.0, 100.0, 512.0, 1000.0, 1e4}) {
    const double exact = exact_max_expectation(n);
    const double rel = std::abs(gev_params(1.0, n).expectation() - exact) / exact;
    const double ceiling = n >= 100.0 ? 0.015 : 0.05;
    if (rel > ceiling) ++bad;
    detail += fmt("%sn=%g %.2f%%", detail.empty() ? "" : ", ", n, 100.0 * rel);
  }
  std::size_t bias_checks = 0;
  VerifyOptions o;
  const auto reps = run_verify_suite("subtree_bias", o);
  bad += count_failed(reps, "subtree_bias.", &bias_checks);
  return {bad == 0, detail + fmt("; subtree bias checks %zu", bias_checks)};
}

Outcome bias_sign() {
  VerifyOptions o;
  const auto reps = run_verify_suite("bias_sign", o);
  std::size_t signs = 0, residuals = 0;
  const std::size_t bad_sign = count_failed(reps, "bias_sign.sign", &signs);
  const std::size_t bad_res = count_failed(reps, "bias_sign.residual", &residuals);
  return {bad_sign == 0 && signs == 24,
          fmt("sign tests %zu/%zu pass; exact-correction residuals %zu/%zu within 3 SE",
              signs - bad_sign, signs, residuals - bad_res, residuals)};
}

Outcome cantelli() {
  VerifyOptions o;
  const auto reps = run_verify_suite("cantelli", o);
  std::size_t exact = 0, approx = 0, order = 0;
  const std::size_t bad = count_failed(reps, "cantelli.exact", &exact) +
                          count_failed(reps, "cantelli.approx", &approx);
  const std::size_t bad_order = count_failed(reps, "cantelli.order", &order);
  return {bad == 0 && exact == 27 && approx == 27,
          fmt("%zu grid points, bound violations=%zu; bound ordering %zu/%zu", exact, bad,
              order - bad_order, order)};
}

Outcome bellman_form_and_sweep() {
  VerifyOptions o;
  auto reps = run_verify_suite("bellman_form", o);
  const auto sweep = run_verify_suite("sweep", o);
  reps.insert(reps.end(), sweep.begin(), sweep.end());
  std::size_t n = 0;
  const std::size_t bad = count_failed(reps, "", &n);
  const auto rows = approximation_sweep(3, 1.0, 4.0, 3, 12);
  return {bad == 0, fmt("max |penalty - gap| = %.2e; sweep rel error %.4f (d=3) to %.4f (d=12)",
                        reps[0].empirical, rows.front().rel_error, rows.back().rel_error)};
}

Outcome degradation() {
  std::ifstream in(config("shift_grid.json"));
  const auto model = make_env(env_config_from_json(nlohmann::ordered_json::parse(in)));
  DegradeOptions o;
  o.depths = {1, 2, 3};
  o.c_values = {1.0};
  o.episodes = 200;
  o.seed = 1;
  const auto rows = degradation_experiment(*model, {0.1, 0.4, 0}, o);
  const double base = rows[0].summary.median;
  bool ok = true;
  std::string detail = fmt("base %.3g", base);
  for (std::size_t d = 1; d <= 3; ++d) {
    double vanilla = 0.0, corrected = 0.0;
    for (const auto& r : rows) {
      if (r.depth != d) continue;
      (r.policy == "vanilla" ? vanilla : corrected) = r.summary.median;
    }
    if (d == 1 && !(vanilla < base)) ok = false;
    if (!(corrected >= vanilla)) ok = false;
    detail += fmt("; d=%zu vanilla %.3g bcts %.3g", d, vanilla, corrected);
  }
  return {ok, detail};
}

Outcome bellman_variance() {
  VerifyOptions o;
  const auto reps = run_verify_suite("bellman_variance", o);
  std::size_t n = 0;
  const std::size_t bad = count_failed(reps, "", &n);
  return {bad == 0 && n == 2, fmt("identity max error %.2e; DP max |delta| %.2e (bound %.2e)",
                                  reps[0].empirical, reps[1].empirical, reps[1].theory)};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

Outcome training_shape() {
  std::ifstream in(config("train_maze.json"));
  const auto base = train_config_from_json(nlohmann::ordered_json::parse(in));
  const auto model = make_env(base.env);
  std::vector<double> deep, flat;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::size_t d : {base.depth, std::size_t{0}}) {
      auto c = base;
      c.seed = seed;
      c.depth = d;
      const auto r = train(c, model);
      const auto e = evaluate(*model, *r.q, PolicySpec{d}, c.eval_episodes,
                              hash_combine(seed, 0xe7a1), c.max_episode_steps);
      (d == 0 ? flat : deep).push_back(e.median);
    }
  }
  const double m_deep = median_of(deep), m_flat = median_of(flat);

  std::ifstream cin(config("train_chain.json"));
  const auto chain_cfg = train_config_from_json(nlohmann::ordered_json::parse(cin));
  const auto chain = make_env(chain_cfg.env);
  const auto exact = dp_exact_q(*chain, chain->gamma(), 1e-12);
  bool converged = true;
  std::string modes;
  for (bool prop : {false, true}) {
    auto c = chain_cfg;
    c.propagated_value = prop;
    const auto r = train(c, chain);
    double err = 0.0;
    for (StateToken s : chain->enumerate_states()) {
      if (chain->is_terminal(s)) continue;
      for (ActionId a = 0; a < 2; ++a) err = std::max(err, std::abs(r.q->at(s, a) - exact->at(s, a)));
    }
    const auto e = evaluate(*chain, *r.q, PolicySpec{c.depth}, c.eval_episodes, 1, c.max_episode_steps);
    converged = converged && err <= 1e-3 && e.median == 1.0;
    modes += fmt("; chain propagated=%s max|Q-Q*| %.1e return %.3g", prop ? "true" : "false", err,
                 e.median);
  }
  return {m_deep > m_flat && converged,
          fmt("maze median return depth %zu %.3g vs depth 0 %.3g", base.depth, m_deep, m_flat) +
              modes};
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> cmds = {
      {"plan", "--env", config("shift_grid.json"), "--depth", "3", "--bcts", "--sigma-o", "0.1",
       "--sigma-e", "0.4"},
      {"train", "--config", config("train_maze.json")},
      {"verify", "--suite", "all", "--trials", "100000", "--seed", "7"},
      {"sweep"},
      {"bench", "--env", config("random20x3.json"), "--depths", "1:6", "--no-timing"},
      {"degrade", "--env", config("shift_grid.json")}};
  std::size_t same = 0;
  std::string detail;
  for (const auto& c : cmds) {
    std::string outs[2];
    int codes[2];
    for (int k = 0; k < 2; ++k) {
      std::vector<const char*> argv = {"bcts"};
      for (const auto& a : c) argv.push_back(a.c_str());
      std::ostringstream out, err;
      codes[k] = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
      outs[k] = out.str();
    }
    const bool ok = codes[0] == 0 && codes[1] == 0 && !outs[0].empty() && outs[0] == outs[1];
    if (ok) ++same;
    detail += fmt("%s%s %s", detail.empty() ? "" : ", ", c[0].c_str(), ok ? "ok" : "DIFF");
  }
  return {same == cmds.size(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"search-oracle equivalence", search_equivalence},
      {"invocation contract", invocation_contract},
      {"Gumbel numerics", gumbel_numerics},
      {"corrected decision sign", bias_sign},
      {"Cantelli bounds", cantelli},
      {"Bellman form and sweep", bellman_form_and_sweep},
      {"noisy-oracle degradation", degradation},
      {"Bellman variance identity", bellman_variance},
      {"training shape", training_shape},
      {"CLI determinism", determinism}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
