#pragma once

#include <cstdint>

// Seedable counter-style generator with explicit stream derivation, plus the
// hand-rolled samplers the simulators need. Everything here is deterministic
// given (seed, call sequence); no global state, no wall clock.

namespace tlml {

// Avalanche mix used both by the generator and by stream derivation.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Derives an independent stream seed from (master seed, replication index,
// purpose tag). Separating index and purpose lets e.g. parameter noise and
// count noise of the same replication use unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::uint64_t purpose = 0) noexcept;

// Purpose tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t params = 1;
inline constexpr std::uint64_t counts = 2;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;

  // Uniform on [0,1) with 53 random bits.
  double uniform() noexcept;
  // Uniform on (0,1]; safe as a log argument.
  double uniform_pos() noexcept;

  // Standard normal (Box-Muller, second deviate cached).
  double normal() noexcept;

  // Binomial(n, p). Inversion from 0 while n*p is small and the pmf at 0
  // cannot underflow; otherwise an exact Bernoulli-count loop. p > 1/2 is
  // handled by the complement so the small-probability path dominates.
  long long binomial(long long n, double p) noexcept;

  // Poisson(lambda): Knuth product method for small lambda, transformed
  // rejection (PTRS) above. Exact for all lambda >= 0.
  long long poisson(double lambda) noexcept;

  // Poisson(lambda) conditioned on a strictly positive outcome, by
  // rejection. Requires lambda > 0 (the loop cannot terminate otherwise).
  long long poisson_positive(double lambda);

 private:
  long long binomial_small_p(long long n, double p) noexcept;

  std::uint64_t state_;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace tlml
