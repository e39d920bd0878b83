#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "tlml/rng.hpp"

// Stochastic discrete-time SIS chain: binomial and Poisson transition laws,
// the deterministic logistic benchmark, and the parameter dynamics driving
// (a_t, c_t).

namespace tlml {

struct SisParams {
  double a = 0.2;   // daily contagion rate
  double c = 0.196; // daily recovery rate
  long long n = 5000;

  // Long-run infected fraction of the deterministic dynamics.
  double alpha() const { return 1.0 - c / a; }
};

// Fixed (a, c); boundary values in [0,1] are allowed and passed through
// unclipped so degenerate no-flow cases stay exact.
struct ConstantDyn {
  double a = 0.2;
  double c = 0.196;
};

// log a_t - log a_star = rho (log a_{t-1} - log a_star) + sigma u_t.
struct LogAr1Dyn {
  double a_star = 0.2;
  double rho = 0.99;
  double sigma = 0.01;
  double c = 0.196;
  double a_0 = 0.2;
};

// Exact discretization of a stationary Ornstein-Uhlenbeck level process
// sampled T times per unit interval: autoregression exp(-k/T) and
// innovation variance (eta^2 / 2k)(1 - exp(-2k/T)). When a_0 is absent the
// path starts from the stationary law.
struct UlrOuDyn {
  double mu = 0.2;
  double k = 1.0;
  double eta = 0.05;
  int horizon = 0;  // time scaling T; 0 means "use the simulated horizon"
  double c = 0.196;
  std::optional<double> a_0;
};

using ParamDynamics = std::variant<ConstantDyn, LogAr1Dyn, UlrOuDyn>;

// Rates per day, entries for t = 0..horizon (the t=0 entry is the initial
// value; the transition into day t uses index t).
struct ParamPath {
  std::vector<double> a;
  std::vector<double> c;
  long clip_events = 0;  // stochastic rates clipped into [1e-6, 1-1e-6]
};

enum class CountLaw { binomial, poisson, poisson_positive };

// Counts per day for t = 0..horizon. new_infections/new_recoveries at index
// t are the day t-1 -> t flows (index 0 holds zeros). Under the Poisson laws
// only the total N2 is drawn, so the recorded flows are net flows and totals
// above n are clamped (clamp_events counts them); the conservation and
// bounds invariants hold for every law.
struct EpidemicPath {
  std::vector<long long> n1;
  std::vector<long long> n2;
  std::vector<long long> new_infections;
  std::vector<long long> new_recoveries;
  long long population = 0;
  std::uint64_t seed = 0;
  long clamp_events = 0;
};

// Closed-form solution alpha / (1 + ((alpha - p2_0)/p2_0) exp(-a alpha t))
// of the deterministic infection-fraction dynamics.
double logistic_solution(double p2_0, double a, double alpha, double t);

// Draws the rate path. Throws std::invalid_argument on invalid dynamics
// parameters (|rho| >= 1, sigma < 0, k <= 0, eta < 0, rates outside [0,1]).
ParamPath simulate_param_path(const ParamDynamics& dyn, int horizon,
                              std::uint64_t seed);

struct BinomialFlows {
  long long new_infections = 0;  // draws from the susceptible pool
  long long retained = 0;        // infected who did not recover
};

// One binomial transition: new_infections ~ B(n - n2_prev, a n2_prev / n)
// and retained ~ B(n2_prev, 1 - c), independent. Throws std::domain_error
// if a n2_prev / n > 1.
BinomialFlows binomial_step(long long n2_prev, double a, double c,
                            long long n, Rng& rng);

// One Poisson transition: total N2 ~ P(lambda) with
// lambda = a (n - n2_prev) n2_prev / n + (1 - c) n2_prev; restricted to
// strictly positive values when restrict_positive and n2_prev > 0.
long long poisson_step(long long n2_prev, double a, double c, long long n,
                       Rng& rng, bool restrict_positive);

struct SimResult {
  EpidemicPath path;
  ParamPath params;
};

// Full path simulation: the parameter path is drawn first on its own RNG
// stream, then counts conditionally on it on a separate stream (so designs
// differing only in parameter dynamics share count noise for equal seeds).
// Requires 0 < n2_0 < n.
SimResult simulate_epidemic(const ParamDynamics& dyn, long long n,
                            long long n2_0, int horizon, CountLaw law,
                            std::uint64_t seed);

}  // namespace tlml
