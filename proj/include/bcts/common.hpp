#ifndef BCTS_COMMON_HPP
#define BCTS_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bcts {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration (environment sizes, budgets, CLI flags).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A search would exceed its node budget. No partial result is produced.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an API contract (dimension mismatch, depth 0 to a planner).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Operation not available for this model (e.g. exact DP on an
/// unbounded state space).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kEulerMascheroni = 0.57721566490153286;
inline constexpr double kPi = 3.14159265358979323846;

/// splitmix64 finalizer. Used for seed splitting and hash-keyed noise.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) noexcept {
  return mix64(seed ^ (mix64(v) + 0x632be59bd9b4e019ULL + (seed << 6) + (seed >> 2)));
}

/// Maps 64 random bits to a double strictly inside (0, 1).
constexpr double bits_to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Integer power with saturation at `cap` (returns cap + 1 on overflow of cap).
constexpr std::uint64_t saturating_pow(std::uint64_t base, unsigned exp,
                                       std::uint64_t cap) noexcept {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

/// Small seedable generator for construction-time randomness. Its output
/// sequence is fully specified here, so generated environments are
/// bit-identical across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1).
  double uniform() noexcept { return bits_to_open_unit(next()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). The modulo bias is below 2^-40 for n < 2^24.
  std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

 private:
  std::uint64_t state_;
};

/// Compensated (Kahan) summation.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const noexcept { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace bcts

#endif  // BCTS_COMMON_HPP
