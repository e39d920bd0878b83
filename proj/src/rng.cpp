#include "tlml/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tlml {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::uint64_t purpose) noexcept {
  std::uint64_t s = mix64(master + kGolden);
  s = mix64(s ^ (index + kGolden));
  s = mix64(s ^ (purpose + 0xd1b54a32d192ed03ULL));
  return s;
}

std::uint64_t Rng::next_u64() noexcept {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() noexcept {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(angle);
  has_spare_normal_ = true;
  return r * std::cos(angle);
}

long long Rng::binomial_small_p(long long n, double p) noexcept {
  // Caller guarantees 0 < p <= 1/2 and n >= 1.
  const double log_pmf0 = static_cast<double>(n) * std::log1p(-p);
  if (static_cast<double>(n) * p <= 50.0 && log_pmf0 > -690.0) {
    // Sequential inversion over the cumulative distribution.
    const double odds = p / (1.0 - p);
    double pmf = std::exp(log_pmf0);
    double u = uniform();
    long long k = 0;
    while (u > pmf && k < n) {
      u -= pmf;
      ++k;
      pmf *= static_cast<double>(n - k + 1) / static_cast<double>(k) * odds;
    }
    return k;
  }
  long long count = 0;
  for (long long i = 0; i < n; ++i) count += uniform() < p ? 1 : 0;
  return count;
}

long long Rng::binomial(long long n, double p) noexcept {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial_small_p(n, 1.0 - p);
  return binomial_small_p(n, p);
}

long long Rng::poisson(double lambda) noexcept {
  if (lambda <= 0.0) return 0;
  if (lambda < 30.0) {
    // Knuth's product-of-uniforms method.
    const double threshold = std::exp(-lambda);
    long long k = 0;
    double prod = uniform_pos();
    while (prod > threshold) {
      ++k;
      prod *= uniform_pos();
    }
    return k;
  }
  // Transformed rejection with squeeze (Hormann's PTRS), exact for large
  // intensities.
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform_pos();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = kd * log_lambda - lambda - std::lgamma(kd + 1.0);
    if (lhs <= rhs) return static_cast<long long>(kd);
  }
}

long long Rng::poisson_positive(double lambda) {
  if (lambda <= 0.0)
    throw std::invalid_argument(
        "poisson_positive requires a strictly positive intensity");
  for (;;) {
    const long long k = poisson(lambda);
    if (k > 0) return k;
  }
}

}  // namespace tlml
