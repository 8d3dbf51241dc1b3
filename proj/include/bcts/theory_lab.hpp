#ifndef BCTS_THEORY_LAB_HPP
#define BCTS_THEORY_LAB_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "bcts/bias.hpp"
#include "bcts/common.hpp"
#include "bcts/envs.hpp"
#include "bcts/normal.hpp"
#include "bcts/value_fn.hpp"

namespace bcts {

struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;  // standard error of the mean
  std::uint64_t n = 0;
};

/// Compensated first and second moments of x - shift.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(double shift = 0.0) : shift_(shift) {}

  void add(double x) noexcept {
    const double y = x - shift_;
    s1_.add(y);
    s2_.add(y * y);
    ++n_;
  }
  void merge(const MomentAccumulator& o) noexcept {
    s1_.add(o.s1_.value());
    s2_.add(o.s2_.value());
    n_ += o.n_;
  }

  SampleMoments result() const {
    SampleMoments m;
    m.n = n_;
    if (n_ == 0) return m;
    const double n = static_cast<double>(n_);
    const double centered = s1_.value() / n;
    m.mean = shift_ + centered;
    if (n_ > 1) {
      m.var = std::max(0.0, (s2_.value() - n * centered * centered) / (n - 1.0));
      m.se = std::sqrt(m.var / n);
    }
    return m;
  }

 private:
  double shift_;
  KahanSum s1_, s2_;
  std::uint64_t n_ = 0;
};

/// Per-trial Gaussian stream (Marsaglia polar method over splitmix64).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) noexcept : rng_(seed) {}

  double uniform() noexcept { return rng_.uniform(); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * rng_.uniform() - 1.0;
      v = 2.0 * rng_.uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mu, double sigma) noexcept { return mu + sigma * normal(); }

  /// Maximum of n draws from N(mu, sigma^2).
  double max_normal(std::uint64_t n, double mu, double sigma) noexcept {
    double best = normal();
    for (std::uint64_t i = 1; i < n; ++i) best = std::max(best, normal());
    return mu + sigma * best;
  }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/**
 * Runs `trials` independent trials and returns the moments of each of the
 * `shifts.size()` outputs. Trial t draws from NormalSampler(hash(seed, t));
 * trials are grouped in fixed chunks whose partial sums are merged in chunk
 * order, so results do not depend on the worker count.
 */
template <class TrialFn>
std::vector<SampleMoments> run_trials(std::uint64_t trials, std::uint64_t seed,
                                      std::span<const double> shifts, TrialFn&& fn,
                                      std::size_t workers = default_workers()) {
  if (trials == 0) throw DomainError("run_trials: need at least one trial");
  constexpr std::uint64_t kChunk = 4096;
  const std::size_t outputs = shifts.size();
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;

  std::vector<std::vector<MomentAccumulator>> partial(chunks);
  auto run_chunk = [&](std::uint64_t c) {
    std::vector<MomentAccumulator> acc;
    acc.reserve(outputs);
    for (double s : shifts) acc.emplace_back(s);
    std::vector<double> out(outputs);
    const std::uint64_t end = std::min(trials, (c + 1) * kChunk);
    for (std::uint64_t t = c * kChunk; t < end; ++t) {
      NormalSampler rng(hash_combine(seed, t));
      fn(rng, std::span<double>(out));
      for (std::size_t k = 0; k < outputs; ++k) acc[k].add(out[k]);
    }
    partial[c] = std::move(acc);
  };

  workers = std::max<std::size_t>(1, std::min<std::size_t>(workers, chunks));
  if (workers == 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<MomentAccumulator> total;
  for (double s : shifts) total.emplace_back(s);
  for (const auto& part : partial) {
    for (std::size_t k = 0; k < outputs; ++k) total[k].merge(part[k]);
  }
  std::vector<SampleMoments> res;
  for (const auto& t : total) res.push_back(t.result());
  return res;
}

/// Sample moments of the maximum of n i.i.d. N(mu, sigma^2) draws.
inline SampleMoments mc_max_gaussian(std::uint64_t n, double mu, double sigma, std::uint64_t trials,
                                     std::uint64_t seed) {
  if (n < 1) throw DomainError("mc_max_gaussian: n must be >= 1");
  if (!(sigma >= 0.0)) throw DomainError("mc_max_gaussian: sigma must be >= 0");
  const double shift[] = {mu};
  return run_trials(trials, seed, shift, [&](NormalSampler& rng, std::span<double> out) {
    out[0] = rng.max_normal(n, mu, sigma);
  })[0];
}

/// Sample moments of Gumbel(mu_gev, sigma_gev) draws by inverse-CDF sampling.
/// Returns the moments of x and of (x - mean)^2.
inline std::vector<SampleMoments> mc_gumbel(const GevParams& g, std::uint64_t trials,
                                            std::uint64_t seed) {
  const double mean = g.expectation();
  const double shift[] = {mean, g.variance()};
  return run_trials(trials, seed, shift, [&](NormalSampler& rng, std::span<double> out) {
    const double x = g.mu_gev - g.sigma_gev * std::log(-std::log(rng.uniform()));
    out[0] = x;
    out[1] = (x - mean) * (x - mean);
  });
}

/**
 * E[max of n standard normals] by adaptive Gauss-Kronrod quadrature of
 *   int_0^inf (1 - Phi^n) dx - int_-inf^0 Phi^n dx
 * on unit panels, with both tails truncated where the integrand is below
 * 1e-17. n may be any real in [2, 1e7].
 */
inline double exact_max_expectation(double n) {
  if (!(n >= 2.0 && n <= 1e7)) throw DomainError("exact_max_expectation: n must lie in [2, 1e7]");
  using boost::math::quadrature::gauss_kronrod;
  auto upper = [n](double x) { return -std::expm1(n * std::log1p(-normal_sf(x))); };
  auto lower = [n](double x) { return std::exp(n * std::log(normal_cdf(x))); };
  constexpr double kTol = 1e-15;
  KahanSum total;
  for (double a = 0.0; n * normal_sf(a) > 1e-17; a += 1.0) {
    total.add(gauss_kronrod<double, 61>::integrate(upper, a, a + 1.0, 8, kTol));
  }
  for (double b = 0.0; n * std::log(normal_cdf(b)) > -40.0; b -= 1.0) {
    total.add(-gauss_kronrod<double, 61>::integrate(lower, b - 1.0, b, 8, kTol));
  }
  return total.value();
}

/// sigma * E[max of n standard normals]; 0 for a single draw.
inline double exact_max_excess(double sigma, double n) {
  if (n < 1.5) return 0.0;
  return sigma * exact_max_expectation(n);
}

/// The exact counterparts of bias_o / bias_e, from quadrature.
inline double exact_bias_o(double sigma_o, std::size_t actions, std::size_t depth) {
  return exact_max_excess(sigma_o, onpolicy_leaves(actions, depth));
}
inline double exact_bias_e(double sigma_e, std::size_t actions, std::size_t depth) {
  return exact_max_excess(sigma_e, offpolicy_leaves(actions, depth));
}

/// Two-branch synthetic tree: one on-policy subtree of A^{d-1} leaves and
/// the pooled off-policy subtrees of A^d - A^{d-1} leaves.
struct SyntheticTreeSpec {
  std::size_t actions = 3;
  std::size_t depth = 2;
  double r_o = 0.0, r_e = 0.0;    // cumulative rewards
  double mu_o = 0.0, mu_e = 0.0;  // true leaf values
  double sigma_o = 1.0, sigma_e = 4.0;
  double gamma = 0.9;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;

  double q_o() const { return r_o + std::pow(gamma, static_cast<double>(depth)) * mu_o; }
  double q_e() const { return r_e + std::pow(gamma, static_cast<double>(depth)) * mu_e; }
  double gap() const { return q_o() - q_e(); }
};

/// How the off-policy branch is corrected before comparison.
enum class Correction {
  kNone,
  kGumbel,      // gamma^d (B_e - B_o) with the Gumbel biases
  kQuadrature,  // the same with exact expectations of the maxima
};

struct TreeDecisionStats {
  double correction = 0.0;  // subtracted from the off-policy Q
  double suboptimal_rate = 0.0;
  double rate_se = 0.0;
  double mean_onpolicy_max = 0.0;   // Q level: R_o + gamma^d G_o
  double mean_offpolicy_max = 0.0;  // Q level, after correction
  double se_onpolicy = 0.0, se_offpolicy = 0.0;
  double mean_diff = 0.0;  // E[Q_o - Q_e] after correction
  double diff_se = 0.0;
  SampleMoments branch_o, branch_e;  // G_o, G_e
};

inline void check_tree_spec(const SyntheticTreeSpec& s) {
  if (s.actions < 2 || s.depth < 1) throw DomainError("synthetic tree needs A >= 2, d >= 1");
  if (!(s.sigma_o >= 0.0 && s.sigma_o <= s.sigma_e)) {
    throw DomainError("synthetic tree needs 0 <= sigma_o <= sigma_e");
  }
  if (s.trials < 1) throw DomainError("synthetic tree needs trials >= 1");
}

inline double tree_correction(const SyntheticTreeSpec& s, Correction c) {
  const double gd = std::pow(s.gamma, static_cast<double>(s.depth));
  switch (c) {
    case Correction::kNone:
      return 0.0;
    case Correction::kGumbel:
      return gd * (bias_e(s.sigma_e, s.actions, s.depth) - bias_o(s.sigma_o, s.actions, s.depth));
    case Correction::kQuadrature:
      return gd * (exact_bias_e(s.sigma_e, s.actions, s.depth) -
                   exact_bias_o(s.sigma_o, s.actions, s.depth));
  }
  return 0.0;
}

/**
 * Monte-Carlo decision between the on-policy and the best off-policy root
 * action. The suboptimal rate counts trials whose choice disagrees with
 * the true ordering; ties go to the on-policy action. With a zero true gap
 * no choice is suboptimal.
 */
inline TreeDecisionStats simulate_tree_decision(const SyntheticTreeSpec& s, Correction corr) {
  check_tree_spec(s);
  const auto n_o = static_cast<std::uint64_t>(onpolicy_leaves(s.actions, s.depth));
  const auto n_e = static_cast<std::uint64_t>(offpolicy_leaves(s.actions, s.depth));
  const double gd = std::pow(s.gamma, static_cast<double>(s.depth));
  const double correction = tree_correction(s, corr);
  const double gap = s.gap();
  const double shifts[] = {s.mu_o, s.mu_e, gap, 0.0};
  const auto m = run_trials(s.trials, s.seed, shifts, [&](NormalSampler& rng, std::span<double> out) {
    const double g_o = rng.max_normal(n_o, s.mu_o, s.sigma_o);
    const double g_e = rng.max_normal(n_e, s.mu_e, s.sigma_e);
    const double q_o = s.r_o + gd * g_o;
    const double q_e = s.r_e + gd * g_e - correction;
    const bool pick_o = q_o >= q_e;
    out[0] = g_o;
    out[1] = g_e;
    out[2] = q_o - q_e;
    out[3] = (gap > 0.0 && !pick_o) || (gap < 0.0 && pick_o) ? 1.0 : 0.0;
  });
  TreeDecisionStats st;
  st.correction = correction;
  st.branch_o = m[0];
  st.branch_e = m[1];
  st.mean_onpolicy_max = s.r_o + gd * m[0].mean;
  st.mean_offpolicy_max = s.r_e + gd * m[1].mean - correction;
  st.se_onpolicy = gd * m[0].se;
  st.se_offpolicy = gd * m[1].se;
  st.mean_diff = m[2].mean;
  st.diff_se = m[2].se;
  st.suboptimal_rate = m[3].mean;
  st.rate_se = m[3].se;
  return st;
}

/// Gumbel scale of the maximum of n draws; a single draw gets the scale
/// with the same variance (sigma sqrt(6) / pi).
inline double gumbel_scale(double sigma, double n) {
  if (n < 1.5) return sigma * std::sqrt(6.0) / kPi;
  return gev_params(sigma, n).sigma_gev;
}

enum class Comparison {
  kWithin,  // |theory - empirical| <= tolerance
  kAtMost,  // empirical <= theory + tolerance
};

struct VerificationReport {
  std::string check;
  double theory = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::kWithin;
  bool pass = false;
};

inline VerificationReport make_report(std::string check, double theory, double empirical,
                                      double se, double tolerance,
                                      Comparison cmp = Comparison::kWithin) {
  VerificationReport r{std::move(check), theory, empirical, se, tolerance, cmp, false};
  r.pass = cmp == Comparison::kWithin ? std::abs(theory - empirical) <= tolerance
                                      : empirical <= theory + tolerance;
  return r;
}

inline nlohmann::ordered_json to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["check"] = r.check;
  j["theory"] = r.theory;
  j["empirical"] = r.empirical;
  j["se"] = r.se;
  j["pass"] = r.pass;
  return j;
}

/// Both Cantelli bounds against the BCTS (Gumbel-corrected) error rate.
inline std::vector<VerificationReport> verify_cantelli(const SyntheticTreeSpec& s,
                                                       const std::string& label = "") {
  const auto st = simulate_tree_decision(s, Correction::kGumbel);
  const double signal = std::abs(s.gap());
  const double sgo = gumbel_scale(s.sigma_o, onpolicy_leaves(s.actions, s.depth));
  const double sge = gumbel_scale(s.sigma_e, offpolicy_leaves(s.actions, s.depth));
  const double exact = cantelli_bound_exact(signal, sgo, sge, s.gamma, s.depth);
  const double approx =
      cantelli_bound_approx(signal, s.sigma_o, s.sigma_e, s.gamma, s.actions, s.depth);
  const double tol = 3.0 * st.rate_se;
  return {make_report("cantelli.exact" + label, exact, st.suboptimal_rate, st.rate_se, tol,
                      Comparison::kAtMost),
          make_report("cantelli.approx" + label, approx, st.suboptimal_rate, st.rate_se, tol,
                      Comparison::kAtMost)};
}

struct SweepRow {
  std::size_t depth = 0;
  double exact_gap = 0.0;
  double approx_gap = 0.0;
  double rel_error = 0.0;
};

/// Exact bias gap B_e - B_o against its closed-form approximation.
inline std::vector<SweepRow> approximation_sweep(std::size_t actions, double sigma_o,
                                                 double sigma_e, std::size_t d_lo,
                                                 std::size_t d_hi) {
  if (d_lo < 1 || d_hi > 16 || d_lo > d_hi) throw DomainError("sweep depths must lie in [1, 16]");
  std::vector<SweepRow> rows;
  for (std::size_t d = d_lo; d <= d_hi; ++d) {
    SweepRow r;
    r.depth = d;
    r.exact_gap = bias_e(sigma_e, actions, d) - bias_o(sigma_o, actions, d);
    r.approx_gap = bias_gap_approx(sigma_o, sigma_e, actions, d);
    r.rel_error = r.exact_gap == 0.0 ? std::abs(r.approx_gap)
                                     : std::abs(r.approx_gap - r.exact_gap) / std::abs(r.exact_gap);
    rows.push_back(r);
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "d,exact_gap,approx_gap,rel_error\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.depth, r.exact_gap, r.approx_gap,
                  r.rel_error);
    os << buf;
  }
}

struct VerifyOptions {
  std::uint64_t trials = 100000;
  std::uint64_t seed = 7;
};

namespace detail {

inline std::string fmt_label(const char* f, auto... args) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Ceiling on the relative error of the Gumbel mean, by n.
inline double gumbel_mean_ceiling(double n) { return n >= 100 ? 0.015 : 0.05; }

inline void suite_gumbel_mean(std::vector<VerificationReport>& out) {
  for (double n : {8.0, 10.0, 64.0, 100.0, 512.0, 1000.0}) {
    const double exact = exact_max_expectation(n);
    const double gumbel = gev_params(1.0, n).expectation();
    out.push_back(make_report(fmt_label("gumbel_mean.rel[n=%g]", n), exact, gumbel, 0.0,
                              gumbel_mean_ceiling(n) * exact));
  }
}

inline void suite_quadrature(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  out.push_back(make_report("quadrature.closed_form[n=2]", 1.0 / std::sqrt(kPi),
                            exact_max_expectation(2.0), 0.0, 1e-8));
  out.push_back(make_report("quadrature.closed_form[n=3]", 1.5 / std::sqrt(kPi),
                            exact_max_expectation(3.0), 0.0, 1e-8));
  for (std::uint64_t n : {2u, 10u, 100u}) {
    const auto mc = mc_max_gaussian(n, 0.0, 1.0, o.trials, hash_combine(o.seed, n));
    out.push_back(make_report(fmt_label("quadrature.mc[n=%llu]", static_cast<unsigned long long>(n)),
                              exact_max_expectation(static_cast<double>(n)), mc.mean, mc.se,
                              4.0 * mc.se));
  }
}

// Branch-level bias: MC mean of the branch maximum minus the leaf mean,
// against the exact expectation; the Gumbel bias against the same value.
inline void suite_subtree_bias(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  const std::size_t actions = 3;
  const double so = 1.0, se = 4.0;
  for (std::size_t d : {2u, 3u, 4u}) {
    const struct {
      const char* side;
      double sigma;
      double n;
      double gumbel;
    } branches[] = {{"o", so, onpolicy_leaves(actions, d), bias_o(so, actions, d)},
                    {"e", se, offpolicy_leaves(actions, d), bias_e(se, actions, d)}};
    for (const auto& b : branches) {
      const auto n = static_cast<std::uint64_t>(b.n);
      const double exact = exact_max_excess(b.sigma, b.n);
      const std::uint64_t stream = d * 2 + (b.side[0] == 'e' ? 1 : 0);
      const auto mc = mc_max_gaussian(n, 0.0, b.sigma, o.trials, hash_combine(o.seed, stream));
      out.push_back(make_report(fmt_label("subtree_bias.mc_bias_%s[A=3,d=%zu]", b.side, d), exact,
                                mc.mean, mc.se, 3.0 * mc.se));
      out.push_back(make_report(fmt_label("subtree_bias.gumbel_bias_%s[A=3,d=%zu]", b.side, d),
                                exact, b.gumbel, 0.0, 0.05 * exact));
    }
  }
}

inline void suite_bias_sign(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  const std::pair<double, double> sigmas[] = {{0.5, 2.0}, {1.0, 4.0}};
  std::uint64_t k = 0;
  for (std::size_t actions : {2u, 3u}) {
    for (std::size_t d : {1u, 2u, 3u}) {
      for (const auto& [so, se] : sigmas) {
        for (double sign : {1.0, -1.0}) {
          SyntheticTreeSpec s;
          s.actions = actions;
          s.depth = d;
          s.sigma_o = so;
          s.sigma_e = se;
          s.mu_o = sign * 0.2 * se;
          s.trials = o.trials;
          s.seed = hash_combine(o.seed, ++k);
          const auto label = fmt_label("[A=%zu,d=%zu,so=%g,se=%g,%s]", actions, d, so, se,
                                       sign > 0 ? "o_best" : "e_best");
          const auto g = simulate_tree_decision(s, Correction::kGumbel);
          const double seen = std::abs(g.mean_diff) > 3.0 * g.diff_se
                                  ? (g.mean_diff > 0.0 ? 1.0 : -1.0)
                                  : 0.0;
          out.push_back(make_report("bias_sign.sign" + label, sign, seen, g.diff_se, 0.0));
          const auto q = simulate_tree_decision(s, Correction::kQuadrature);
          out.push_back(make_report("bias_sign.residual" + label, s.gap(), q.mean_diff, q.diff_se,
                                    3.0 * q.diff_se));
        }
      }
    }
  }
}

inline void suite_cantelli(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  const std::pair<double, double> sigmas[] = {{0.5, 2.0}, {1.0, 4.0}, {1.0, 8.0}};
  std::uint64_t k = 0;
  for (std::size_t d : {2u, 3u, 4u}) {
    for (const auto& [so, se] : sigmas) {
      for (double mult : {0.0, 0.25, 1.0}) {
        SyntheticTreeSpec s;
        s.actions = 3;
        s.depth = d;
        s.sigma_o = so;
        s.sigma_e = se;
        s.mu_o = mult * se;
        s.trials = o.trials;
        s.seed = hash_combine(o.seed, 1000 + ++k);
        const auto label = fmt_label("[A=3,d=%zu,so=%g,se=%g,signal=%g]", d, so, se,
                                     std::abs(s.gap()));
        auto reps = verify_cantelli(s, label);
        if (onpolicy_leaves(3, d) >= 9.0 && mult > 0.0) {
          out.push_back(make_report("cantelli.order" + label, reps[1].theory, reps[0].theory, 0.0,
                                    0.0, Comparison::kAtMost));
        }
        out.insert(out.end(), reps.begin(), reps.end());
      }
    }
  }
}

// Relative error of the closed-form gap falls with d on [3, 12] and stays
// under the ceiling pinned from the d = 3 value.
inline constexpr double kSweepCeiling = 0.135;

inline void suite_sweep(std::vector<VerificationReport>& out) {
  const auto rows = approximation_sweep(3, 1.0, 4.0, 3, 12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.push_back(make_report(fmt_label("sweep.ceiling[d=%zu]", rows[i].depth), kSweepCeiling,
                              rows[i].rel_error, 0.0, 0.0, Comparison::kAtMost));
    if (i > 0) {
      out.push_back(make_report(fmt_label("sweep.decreasing[d=%zu]", rows[i].depth),
                                rows[i - 1].rel_error, rows[i].rel_error, 0.0, 0.0,
                                Comparison::kAtMost));
    }
  }
}

inline void suite_bellman_form(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  SplitMix64 rng(hash_combine(o.seed, 5));
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double d_o = rng.uniform(0.0, 5.0);
    const double d_e = rng.uniform(0.0, 5.0);
    const std::size_t actions = 2 + rng.below(17);
    const std::size_t depth = 1 + rng.below(10);
    const double b = bellman_penalty(d_o, d_e, actions, depth);
    const double g = bias_gap_approx(d_o / std::sqrt(2.0), d_e / std::sqrt(2.0), actions, depth);
    worst = std::max(worst, std::abs(b - g));
  }
  out.push_back(make_report("bellman_form.consistency", 0.0, worst, 0.0, 1e-12));
}

inline void suite_bellman_variance(std::vector<VerificationReport>& out, const VerifyOptions& o) {
  const double gamma = 0.9, tol = 1e-10;
  auto model = make_random_det_mdp(50, 3, 0.1, gamma, hash_combine(o.seed, 1));
  TabularQ q(50, 3);
  SplitMix64 rng(hash_combine(o.seed, 2));
  for (std::size_t s = 0; s < 50; ++s) {
    for (ActionId a = 0; a < 3; ++a) q.set(s, a, rng.uniform(-5.0, 5.0));
  }
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const StateToken s = rng.below(50);
    const auto a = static_cast<ActionId>(rng.below(3));
    const double q0 = q.value(s, a);
    const double q1 = one_step_estimate(*model, q, s, a, gamma);
    const double lhs = variance_estimate(bellman_error(*model, q, s, a, gamma));
    worst = std::max(worst, std::abs(lhs - (q1 - q0) * (q1 - q0) / 2.0));
  }
  out.push_back(make_report("bellman_variance.identity", 0.0, worst, 0.0, 0.0));

  const auto exact = dp_exact_q(*model, gamma, tol);
  double worst_delta = 0.0;
  for (StateToken s : model->enumerate_states()) {
    if (model->is_terminal(s)) continue;
    for (ActionId a = 0; a < 3; ++a) {
      worst_delta = std::max(worst_delta, std::abs(bellman_error(*model, *exact, s, a, gamma)));
    }
  }
  out.push_back(make_report("bellman_variance.dp_fixed_point", 2.0 * tol / (1.0 - gamma),
                            worst_delta, 0.0, 0.0, Comparison::kAtMost));
}

}  // namespace detail

inline const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = {
      "gumbel_mean", "quadrature", "subtree_bias", "bias_sign",
      "cantelli",    "sweep",      "bellman_form", "bellman_variance"};
  return names;
}

/// Runs one named suite, or every suite for "all".
inline std::vector<VerificationReport> run_verify_suite(const std::string& suite,
                                                        const VerifyOptions& o = {}) {
  std::vector<VerificationReport> out;
  if (suite == "all") {
    for (const auto& name : verify_suite_names()) {
      auto part = run_verify_suite(name, o);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (suite == "gumbel_mean") detail::suite_gumbel_mean(out);
  else if (suite == "quadrature") detail::suite_quadrature(out, o);
  else if (suite == "subtree_bias") detail::suite_subtree_bias(out, o);
  else if (suite == "bias_sign") detail::suite_bias_sign(out, o);
  else if (suite == "cantelli") detail::suite_cantelli(out, o);
  else if (suite == "sweep") detail::suite_sweep(out);
  else if (suite == "bellman_form") detail::suite_bellman_form(out, o);
  else if (suite == "bellman_variance") detail::suite_bellman_variance(out, o);
  else throw ConfigError("unknown verify suite \"" + suite + "\"");
  return out;
}

}  // namespace bcts

#endif  // BCTS_THEORY_LAB_HPP
