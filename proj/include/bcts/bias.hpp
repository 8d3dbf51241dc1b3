#ifndef BCTS_BIAS_HPP
#define BCTS_BIAS_HPP

#include <cmath>
#include <span>
#include <vector>

#include "bcts/common.hpp"
#include "bcts/normal.hpp"
#include "bcts/value_fn.hpp"

namespace bcts {

/// Gumbel (GEV with shape 0) location/scale.
struct GevParams {
  double mu_gev = 0.0;
  double sigma_gev = 0.0;

  double expectation() const { return mu_gev + kEulerMascheroni * sigma_gev; }
  double variance() const { return sigma_gev * sigma_gev * kPi * kPi / 6.0; }
};

/// Gumbel approximation to the maximum of n i.i.d. N(mu, sigma^2) draws:
///   mu_gev    = mu + sigma Phi^{-1}(1 - 1/n)
///   sigma_gev = sigma [Phi^{-1}(1 - 1/(e n)) - Phi^{-1}(1 - 1/n)]
inline GevParams gev_params(double sigma, double n, double mu = 0.0) {
  if (!(n >= 2.0)) throw DomainError("gev_params: n must be at least 2");
  if (!(sigma >= 0.0)) throw DomainError("gev_params: sigma must be non-negative");
  const double z = inv_norm_sf(1.0 / n);
  const double z_e = inv_norm_sf(1.0 / (std::exp(1.0) * n));
  return {mu + sigma * z, sigma * (z_e - z)};
}

/// Leaf counts of the base-action subtree (A^{d-1}) and of the rest
/// (A^d - A^{d-1}), as doubles so deep trees do not overflow.
inline double onpolicy_leaves(std::size_t actions, std::size_t depth) {
  return std::pow(static_cast<double>(actions), static_cast<double>(depth) - 1.0);
}
inline double offpolicy_leaves(std::size_t actions, std::size_t depth) {
  return onpolicy_leaves(actions, depth) * (static_cast<double>(actions) - 1.0);
}

namespace detail {
inline void check_tree(std::size_t actions, std::size_t depth) {
  if (actions < 2) throw DomainError("need A >= 2");
  if (depth < 1) throw DomainError("need d >= 1");
}

// Expected excess of the maximum of n draws over their mean, in units of
// sigma, under the Gumbel approximation. A single draw has no excess.
inline double max_excess(double sigma, double n) {
  if (n < 1.5) return 0.0;
  return gev_params(sigma, n).expectation();
}
}  // namespace detail

/// Maximization bias of the base-action subtree; 0 at d = 1.
inline double bias_o(double sigma_o, std::size_t actions, std::size_t depth) {
  detail::check_tree(actions, depth);
  if (!(sigma_o >= 0.0)) throw DomainError("bias_o: sigma must be non-negative");
  return detail::max_excess(sigma_o, onpolicy_leaves(actions, depth));
}

/// Maximization bias of the off-policy subtrees; 0 at d = 1, A = 2.
inline double bias_e(double sigma_e, std::size_t actions, std::size_t depth) {
  detail::check_tree(actions, depth);
  if (!(sigma_e >= 0.0)) throw DomainError("bias_e: sigma must be non-negative");
  return detail::max_excess(sigma_e, offpolicy_leaves(actions, depth));
}

/// Closed-form approximation of B_e - B_o:
///   sqrt(2 ln A) (sigma_e sqrt(d) - sigma_o sqrt(d-1)) - (sigma_e - sigma_o)/2
inline double bias_gap_approx(double sigma_o, double sigma_e, std::size_t actions,
                              std::size_t depth) {
  detail::check_tree(actions, depth);
  const double d = static_cast<double>(depth);
  return std::sqrt(2.0 * std::log(static_cast<double>(actions))) *
             (sigma_e * std::sqrt(d) - sigma_o * std::sqrt(d - 1.0)) -
         (sigma_e - sigma_o) / 2.0;
}

/// The Bellman-error form of the bias gap:
///   sqrt(ln A) (de sqrt(d) - do sqrt(d-1)) - (de - do)/sqrt(8)
/// which is bias_gap_approx with sigma = delta/sqrt(2).
inline double bellman_penalty(double delta_o, double delta_e, std::size_t actions,
                              std::size_t depth) {
  detail::check_tree(actions, depth);
  if (!(delta_o >= 0.0 && delta_e >= 0.0)) {
    throw DomainError("bellman_penalty: Bellman errors must be non-negative");
  }
  const double d = static_cast<double>(depth);
  return std::sqrt(std::log(static_cast<double>(actions))) *
             (delta_e * std::sqrt(d) - delta_o * std::sqrt(d - 1.0)) -
         (delta_e - delta_o) / std::sqrt(8.0);
}

inline double bellman_penalty(const BellmanStats& stats, std::size_t actions, std::size_t depth) {
  return bellman_penalty(stats.delta_o, stats.delta_e, actions, depth);
}

/// Cantelli bound on choosing a sub-optimal root action, from the Gumbel
/// scales of the two subtree maxima.
inline double cantelli_bound_exact(double signal, double sigma_gev_o, double sigma_gev_e,
                                   double gamma, std::size_t depth) {
  if (!(signal >= 0.0)) throw DomainError("cantelli_bound_exact: signal must be >= 0");
  if (signal == 0.0) return 1.0;
  const double noise = std::pow(gamma, 2.0 * static_cast<double>(depth)) * kPi * kPi *
                       (sigma_gev_o * sigma_gev_o + sigma_gev_e * sigma_gev_e);
  if (noise == 0.0) return 0.0;
  return 1.0 / (1.0 + 6.0 * signal * signal / noise);
}

/// The same bound with the Gumbel scales replaced by sigma / sqrt(d ln A).
inline double cantelli_bound_approx(double signal, double sigma_o, double sigma_e, double gamma,
                                    std::size_t actions, std::size_t depth) {
  detail::check_tree(actions, depth);
  if (!(signal >= 0.0)) throw DomainError("cantelli_bound_approx: signal must be >= 0");
  if (signal == 0.0) return 1.0;
  const double d = static_cast<double>(depth);
  const double noise = std::pow(gamma, 2.0 * d) * kPi * kPi * (sigma_o * sigma_o + sigma_e * sigma_e);
  if (noise == 0.0) return 0.0;
  return 1.0 /
         (1.0 + 6.0 * d * std::log(static_cast<double>(actions)) * signal * signal / noise);
}

/// Root-action correction: c * gamma^d * B(delta_e, delta_o, A, d),
/// subtracted from every root action except the base action.
struct PenaltySpec {
  BellmanStats stats;
  std::size_t actions = 0;
  std::size_t depth = 0;
  double gamma = 0.0;
  double c = 1.0;
  bool clamp_penalty_at_zero = false;

  double amount() const {
    double b = bellman_penalty(stats, actions, depth);
    if (clamp_penalty_at_zero && b < 0.0) b = 0.0;
    return c * std::pow(gamma, static_cast<double>(depth)) * b;
  }
};

/// root_q with `penalty` subtracted from every action other than pi_o.
inline std::vector<double> apply_root_penalty(std::span<const double> root_q, double penalty,
                                              ActionId pi_o) {
  if (pi_o >= root_q.size()) throw ContractError("base action out of range");
  std::vector<double> out(root_q.begin(), root_q.end());
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (a != pi_o) out[a] -= penalty;
  }
  return out;
}

inline std::vector<double> corrected_root_q(std::span<const double> root_q, std::size_t depth,
                                            const PenaltySpec& spec, ActionId pi_o) {
  if (spec.actions != root_q.size() || spec.depth != depth) {
    throw ContractError("corrected_root_q: penalty spec does not match the plan");
  }
  return apply_root_penalty(root_q, spec.amount(), pi_o);
}

}  // namespace bcts

#endif  // BCTS_BIAS_HPP
