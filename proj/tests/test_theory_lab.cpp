#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "bcts/theory_lab.hpp"

using namespace bcts;

TEST_CASE("Kahan summation keeps small terms") {
  KahanSum k;
  k.add(1.0);
  for (int i = 0; i < 1000000; ++i) k.add(1e-16);
  CHECK(k.value() == Catch::Approx(1.0 + 1e-10).epsilon(1e-15));
}

TEST_CASE("moment accumulator") {
  MomentAccumulator a(10.0), b(10.0), all(10.0);
  const double xs[] = {9.0, 11.0, 10.5, 12.0, 8.5, 10.0};
  for (int i = 0; i < 6; ++i) {
    (i < 3 ? a : b).add(xs[i]);
    all.add(xs[i]);
  }
  a.merge(b);
  const auto m = a.result();
  const auto r = all.result();
  CHECK(m.n == 6);
  CHECK(m.mean == Catch::Approx(61.0 / 6.0));
  CHECK(m.mean == r.mean);
  CHECK(m.var == Catch::Approx(r.var));
  double ss = 0.0;
  for (double x : xs) ss += (x - 61.0 / 6.0) * (x - 61.0 / 6.0);
  CHECK(m.var == Catch::Approx(ss / 5.0));
  CHECK(m.se == Catch::Approx(std::sqrt(ss / 5.0 / 6.0)));
  CHECK(MomentAccumulator().result().n == 0);
}

TEST_CASE("trial results do not depend on the worker count") {
  const double shift[] = {0.0};
  auto fn = [](NormalSampler& rng, std::span<double> out) { out[0] = rng.max_normal(5, 0.0, 1.0); };
  const auto one = run_trials(20000, 3, shift, fn, 1);
  const auto four = run_trials(20000, 3, shift, fn, 4);
  CHECK(one[0].mean == four[0].mean);
  CHECK(one[0].var == four[0].var);
  CHECK(one[0].n == 20000);
  const auto other = run_trials(20000, 4, shift, fn, 1);
  CHECK(other[0].mean != one[0].mean);
  CHECK_THROWS_AS(run_trials(0, 3, shift, fn), DomainError);
}

TEST_CASE("sampler moments") {
  NormalSampler rng(1);
  MomentAccumulator acc;
  for (int i = 0; i < 200000; ++i) acc.add(rng.normal(2.0, 3.0));
  const auto m = acc.result();
  CHECK(std::abs(m.mean - 2.0) <= 4.0 * m.se);
  CHECK(std::abs(std::sqrt(m.var) - 3.0) <= 4.0 * 3.0 / std::sqrt(2.0 * 200000));
}

TEST_CASE("exact expectation of the maximum") {
  CHECK(exact_max_expectation(2.0) == Catch::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));
  CHECK(exact_max_expectation(3.0) == Catch::Approx(1.5 / std::sqrt(kPi)).epsilon(1e-12));
  const std::pair<double, double> table[] = {
      {8.0, 1.423600306045},    {10.0, 1.538752730835},   {64.0, 2.343733465079},
      {100.0, 2.507593636442},  {512.0, 3.043903161204},  {1000.0, 3.241435769133},
      {1e4, 3.851615817067},    {1e6, 4.862897486196},    {1e7, 5.300954010173}};
  for (const auto& [n, v] : table) {
    INFO(n);
    CHECK(exact_max_expectation(n) == Catch::Approx(v).epsilon(1e-11));
  }
  CHECK_THROWS_AS(exact_max_expectation(1.0), DomainError);
  CHECK_THROWS_AS(exact_max_expectation(2e7), DomainError);
  CHECK(exact_max_excess(2.0, 1.0) == 0.0);
  CHECK(exact_max_excess(2.0, 10.0) == Catch::Approx(2.0 * 1.538752730835));
  CHECK(exact_bias_o(1.0, 3, 1) == 0.0);
  CHECK(exact_bias_e(4.0, 3, 2) == Catch::Approx(4.0 * exact_max_expectation(6.0)));
}

TEST_CASE("Monte-Carlo maxima agree with quadrature") {
  for (std::uint64_t n : {2u, 10u, 100u}) {
    const auto mc = mc_max_gaussian(n, 1.0, 2.0, 100000, 17 + n);
    CHECK(std::abs(mc.mean - (1.0 + 2.0 * exact_max_expectation(static_cast<double>(n)))) <=
          4.0 * mc.se);
  }
  const auto single = mc_max_gaussian(1, 0.0, 1.0, 100000, 2);
  CHECK(std::abs(single.mean) <= 4.0 * single.se);
  CHECK_THROWS_AS(mc_max_gaussian(0, 0.0, 1.0, 10, 0), DomainError);
}

TEST_CASE("Gumbel sampling matches its moments") {
  const auto g = gev_params(1.5, 50.0, 0.3);
  const auto m = mc_gumbel(g, 200000, 9);
  CHECK(std::abs(m[0].mean - g.expectation()) <= 4.0 * m[0].se);
  CHECK(std::abs(m[1].mean - g.variance()) <= 4.0 * m[1].se);
}

TEST_CASE("Gumbel scale") {
  CHECK(gumbel_scale(2.0, 1.0) == Catch::Approx(2.0 * std::sqrt(6.0) / kPi));
  CHECK(gumbel_scale(2.0, 9.0) == gev_params(2.0, 9.0).sigma_gev);
}

TEST_CASE("synthetic tree spec") {
  SyntheticTreeSpec s;
  s.r_o = 1.0;
  s.mu_o = 2.0;
  s.r_e = 0.5;
  s.mu_e = 1.0;
  s.depth = 2;
  CHECK(s.q_o() == Catch::Approx(1.0 + 0.81 * 2.0));
  CHECK(s.gap() == Catch::Approx(0.5 + 0.81));

  SyntheticTreeSpec bad;
  bad.sigma_o = 5.0;
  bad.sigma_e = 1.0;
  CHECK_THROWS_AS(simulate_tree_decision(bad, Correction::kNone), DomainError);
  bad = {};
  bad.actions = 1;
  CHECK_THROWS_AS(simulate_tree_decision(bad, Correction::kNone), DomainError);
}

TEST_CASE("tree corrections") {
  SyntheticTreeSpec s;
  s.actions = 3;
  s.depth = 3;
  s.sigma_o = 1.0;
  s.sigma_e = 4.0;
  const double gd = std::pow(0.9, 3);
  CHECK(tree_correction(s, Correction::kNone) == 0.0);
  CHECK(tree_correction(s, Correction::kGumbel) ==
        Catch::Approx(gd * (bias_e(4.0, 3, 3) - bias_o(1.0, 3, 3))));
  CHECK(tree_correction(s, Correction::kQuadrature) ==
        Catch::Approx(gd * 4.0 * exact_max_expectation(18.0) - gd * exact_max_expectation(9.0)));
}

TEST_CASE("uncorrected search prefers the noisier branch") {
  SyntheticTreeSpec s;
  s.actions = 3;
  s.depth = 3;
  s.sigma_o = 0.5;
  s.sigma_e = 2.0;
  s.mu_o = 0.5;
  s.trials = 20000;
  s.seed = 4;
  const auto none = simulate_tree_decision(s, Correction::kNone);
  const auto exact = simulate_tree_decision(s, Correction::kQuadrature);
  CHECK(none.mean_diff < 0.0);
  CHECK(none.suboptimal_rate > 0.5);
  CHECK(std::abs(exact.mean_diff - s.gap()) <= 4.0 * exact.diff_se);
  CHECK(exact.suboptimal_rate < none.suboptimal_rate);
  CHECK(exact.branch_o.mean == none.branch_o.mean);
  CHECK(exact.mean_offpolicy_max == Catch::Approx(none.mean_offpolicy_max - exact.correction));
}

TEST_CASE("zero gap has no suboptimal choice") {
  SyntheticTreeSpec s;
  s.trials = 5000;
  const auto st = simulate_tree_decision(s, Correction::kGumbel);
  CHECK(st.suboptimal_rate == 0.0);
}

TEST_CASE("noise-free tree is deterministic") {
  SyntheticTreeSpec s;
  s.sigma_o = 0.0;
  s.sigma_e = 0.0;
  s.mu_o = 1.0;
  s.mu_e = 1.5;
  s.trials = 100;
  const auto st = simulate_tree_decision(s, Correction::kGumbel);
  CHECK(st.correction == 0.0);
  CHECK(st.suboptimal_rate == 0.0);
  CHECK(st.mean_diff == Catch::Approx(s.gap()));
  CHECK(st.diff_se == 0.0);
}

TEST_CASE("verification reports") {
  const auto within = make_report("x", 1.0, 1.05, 0.01, 0.1);
  CHECK(within.pass);
  CHECK_FALSE(make_report("x", 1.0, 1.2, 0.01, 0.1).pass);
  CHECK(make_report("y", 0.3, 0.1, 0.0, 0.0, Comparison::kAtMost).pass);
  CHECK_FALSE(make_report("y", 0.3, 0.35, 0.0, 0.01, Comparison::kAtMost).pass);
  CHECK(to_json(within).dump() ==
        R"({"check":"x","theory":1.0,"empirical":1.05,"se":0.01,"pass":true})");
}

TEST_CASE("Cantelli reports bound the corrected error rate") {
  SyntheticTreeSpec s;
  s.actions = 3;
  s.depth = 3;
  s.sigma_o = 1.0;
  s.sigma_e = 4.0;
  s.mu_o = 4.0;
  s.trials = 20000;
  s.seed = 12;
  const auto reps = verify_cantelli(s, "[t]");
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].check == "cantelli.exact[t]");
  CHECK(reps[1].check == "cantelli.approx[t]");
  CHECK(reps[0].pass);
  CHECK(reps[1].pass);
  CHECK(reps[0].empirical == reps[1].empirical);
}

TEST_CASE("approximation sweep") {
  const auto rows = approximation_sweep(3, 1.0, 4.0, 1, 16);
  REQUIRE(rows.size() == 16);
  for (const auto& r : rows) {
    CHECK(r.exact_gap == Catch::Approx(bias_e(4.0, 3, r.depth) - bias_o(1.0, 3, r.depth)));
    CHECK(r.approx_gap == bias_gap_approx(1.0, 4.0, 3, r.depth));
  }
  for (std::size_t i = 3; i < 12; ++i) CHECK(rows[i].rel_error <= rows[i - 1].rel_error);
  CHECK_THROWS_AS(approximation_sweep(3, 1.0, 4.0, 0, 4), DomainError);
  CHECK_THROWS_AS(approximation_sweep(3, 1.0, 4.0, 2, 17), DomainError);

  std::ostringstream os;
  const auto two = approximation_sweep(3, 1.0, 4.0, 3, 4);
  write_sweep_csv(os, two);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "d,exact_gap,approx_gap,rel_error");
  std::getline(is, line);
  CHECK(line.rfind("3,", 0) == 0);
  CHECK(std::stod(line.substr(2)) == two[0].exact_gap);
}

TEST_CASE("verify suites") {
  CHECK(verify_suite_names().size() == 8);
  VerifyOptions o;
  o.trials = 20000;
  for (const char* name : {"gumbel_mean", "quadrature", "sweep", "bellman_form", "bellman_variance"}) {
    INFO(name);
    const auto reps = run_verify_suite(name, o);
    CHECK_FALSE(reps.empty());
    for (const auto& r : reps) {
      INFO(r.check);
      CHECK(r.pass);
    }
  }
  CHECK(run_verify_suite("gumbel_mean", o).size() == 6);
  CHECK_THROWS_AS(run_verify_suite("nope", o), ConfigError);
}

TEST_CASE("suite output is reproducible") {
  VerifyOptions o;
  o.trials = 5000;
  o.seed = 3;
  const auto a = run_verify_suite("subtree_bias", o);
  const auto b = run_verify_suite("subtree_bias", o);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]).dump() == to_json(b[i]).dump());
}
