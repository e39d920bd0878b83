#include "tlml/sis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tlml {

namespace {

constexpr double kRateLo = 1e-6;
constexpr double kRateHi = 1.0 - 1e-6;

double clip_rate(double v, long& events) {
  if (v < kRateLo) {
    ++events;
    return kRateLo;
  }
  if (v > kRateHi) {
    ++events;
    return kRateHi;
  }
  return v;
}

void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

}  // namespace

double logistic_solution(double p2_0, double a, double alpha, double t) {
  if (!(p2_0 > 0.0 && p2_0 < 1.0))
    throw std::invalid_argument("initial fraction must lie in (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("long-run fraction must lie in (0,1)");
  if (!(a > 0.0)) throw std::invalid_argument("contagion rate must be > 0");
  const double ratio = (alpha - p2_0) / p2_0;
  return alpha / (1.0 + ratio * std::exp(-a * alpha * t));
}

ParamPath simulate_param_path(const ParamDynamics& dyn, int horizon,
                              std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  ParamPath path;
  path.a.resize(static_cast<std::size_t>(horizon) + 1);
  path.c.resize(static_cast<std::size_t>(horizon) + 1);
  Rng rng(seed);

  if (const auto* d = std::get_if<ConstantDyn>(&dyn)) {
    check_unit_interval(d->a, "contagion rate");
    check_unit_interval(d->c, "recovery rate");
    for (int t = 0; t <= horizon; ++t) {
      path.a[t] = d->a;
      path.c[t] = d->c;
    }
    return path;
  }

  if (const auto* d = std::get_if<LogAr1Dyn>(&dyn)) {
    if (!(std::abs(d->rho) < 1.0))
      throw std::invalid_argument("autoregressive rho must satisfy |rho| < 1");
    if (d->sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (!(d->a_star > 0.0 && d->a_0 > 0.0))
      throw std::invalid_argument("contagion levels must be > 0");
    check_unit_interval(d->c, "recovery rate");
    // Track the log deviation so sigma = 0 with a_0 = a_star reproduces the
    // constant design exactly.
    double dev = std::log(d->a_0 / d->a_star);
    path.a[0] = clip_rate(d->a_star * std::exp(dev), path.clip_events);
    path.c[0] = d->c;
    for (int t = 1; t <= horizon; ++t) {
      dev = d->rho * dev + d->sigma * rng.normal();
      path.a[t] = clip_rate(d->a_star * std::exp(dev), path.clip_events);
      path.c[t] = d->c;
    }
    return path;
  }

  const auto& d = std::get<UlrOuDyn>(dyn);
  if (!(d.k > 0.0)) throw std::invalid_argument("mean reversion k must be > 0");
  if (d.eta < 0.0) throw std::invalid_argument("eta must be >= 0");
  check_unit_interval(d.c, "recovery rate");
  const double scale = d.horizon > 0 ? d.horizon : horizon;
  const double rho_t = std::exp(-d.k / scale);
  const double stat_var = d.eta * d.eta / (2.0 * d.k);
  const double innov_sd = std::sqrt(stat_var * (1.0 - rho_t * rho_t));
  double x = d.a_0 ? (*d.a_0 - d.mu) : std::sqrt(stat_var) * rng.normal();
  path.a[0] = clip_rate(d.mu + x, path.clip_events);
  path.c[0] = d.c;
  for (int t = 1; t <= horizon; ++t) {
    x = rho_t * x + innov_sd * rng.normal();
    path.a[t] = clip_rate(d.mu + x, path.clip_events);
    path.c[t] = d.c;
  }
  return path;
}

BinomialFlows binomial_step(long long n2_prev, double a, double c,
                            long long n, Rng& rng) {
  if (n2_prev < 0 || n2_prev > n)
    throw std::domain_error("infected count outside [0, n]");
  const double p_infect =
      a * static_cast<double>(n2_prev) / static_cast<double>(n);
  if (p_infect > 1.0)
    throw std::domain_error(
        "infection probability a*N2/n exceeds 1 (a=" + std::to_string(a) +
        ", N2=" + std::to_string(n2_prev) + ")");
  BinomialFlows flows;
  flows.new_infections = rng.binomial(n - n2_prev, p_infect);
  flows.retained = rng.binomial(n2_prev, 1.0 - c);
  return flows;
}

long long poisson_step(long long n2_prev, double a, double c, long long n,
                       Rng& rng, bool restrict_positive) {
  if (n2_prev < 0 || n2_prev > n)
    throw std::domain_error("infected count outside [0, n]");
  const double n2 = static_cast<double>(n2_prev);
  const double lambda =
      a * (static_cast<double>(n) - n2) * n2 / static_cast<double>(n) +
      (1.0 - c) * n2;
  if (restrict_positive && n2_prev > 0) return rng.poisson_positive(lambda);
  return rng.poisson(lambda);
}

SimResult simulate_epidemic(const ParamDynamics& dyn, long long n,
                            long long n2_0, int horizon, CountLaw law,
                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("population must be >= 1");
  if (!(n2_0 > 0 && n2_0 < n))
    throw std::invalid_argument("initial infected count must satisfy 0 < N2(0) < n");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");

  SimResult result;
  result.params =
      simulate_param_path(dyn, horizon, derive_seed(seed, 0, stream::params));
  Rng counts_rng(derive_seed(seed, 0, stream::counts));

  EpidemicPath& path = result.path;
  const std::size_t len = static_cast<std::size_t>(horizon) + 1;
  path.n1.resize(len);
  path.n2.resize(len);
  path.new_infections.assign(len, 0);
  path.new_recoveries.assign(len, 0);
  path.population = n;
  path.seed = seed;
  path.n2[0] = n2_0;
  path.n1[0] = n - n2_0;

  for (int t = 1; t <= horizon; ++t) {
    const long long prev = path.n2[t - 1];
    const double a_t = result.params.a[t];
    const double c_t = result.params.c[t];
    if (law == CountLaw::binomial) {
      const BinomialFlows flows = binomial_step(prev, a_t, c_t, n, counts_rng);
      path.new_infections[t] = flows.new_infections;
      path.new_recoveries[t] = prev - flows.retained;
      path.n2[t] = flows.new_infections + flows.retained;
    } else {
      long long total = poisson_step(prev, a_t, c_t, n, counts_rng,
                                     law == CountLaw::poisson_positive);
      if (total > n) {
        total = n;
        ++path.clamp_events;
      }
      path.n2[t] = total;
      path.new_infections[t] = total > prev ? total - prev : 0;
      path.new_recoveries[t] = prev > total ? prev - total : 0;
    }
    path.n1[t] = n - path.n2[t];
  }
  return result;
}

}  // namespace tlml
