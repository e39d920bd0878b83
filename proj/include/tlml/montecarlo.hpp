#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tlml/estimator.hpp"
#include "tlml/sis.hpp"
#include "tlml/weights.hpp"

// Scenario harness: simulate epidemic paths, run the functional estimator
// across weight schemes, and reduce the deviation series to the summary
// statistics, densities, and correlation diagnostics reported by the study.

namespace tlml {

inline std::vector<WeightScheme> default_schemes() {
  return {Geometric{0.1}, Geometric{0.5}, Geometric{0.9}};
}

struct ScenarioConfig {
  ParamDynamics dynamics = ConstantDyn{0.2, 0.196};
  long long population = 5000;
  long long initial_infected = 85;
  int horizon = 600;  // simulated days; estimation runs t_min..horizon
  CountLaw law = CountLaw::binomial;
  std::vector<WeightScheme> schemes = default_schemes();
  int t_min = 100;  // burn-in: estimation starts here
  int replications = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool warm_start = true;
  FitOptions fit_options{};
};

// Per-date flags for the deviation series.
enum class DateFlag : int { ok = 0, bound = 1, failed = 2 };

struct TrimRule {
  double lower_q = 0.005;
  double upper_q = 0.995;
  bool drop_bound_hits = true;
};

struct DeviationStats {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;  // m3 / m2^(3/2)
  double kurtosis = 0.0;  // raw m4 / m2^2
  int retained = 0;
  int trimmed = 0;  // bound-hit drops plus quantile-trimmed values
  int failed = 0;
  int total = 0;
  bool degenerate = false;  // zero variance: skewness/kurtosis undefined
};

// Moments after dropping failed dates, bound-hit dates (when the rule says
// so), and values outside the [lower_q, upper_q] sample quantiles
// (linear-interpolation quantiles; values equal to a cut survive).
// Throws std::invalid_argument when fewer than 10 points remain.
DeviationStats deviation_stats(std::span<const double> series,
                               std::span<const int> flags,
                               const TrimRule& rule = {});
DeviationStats deviation_stats(std::span<const double> series,
                               const TrimRule& rule = {});

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

// Gaussian-kernel density on a 512-point grid spanning the data range
// +/- 3 bandwidths. bandwidth = 0 selects Silverman's rule
// 1.06 sd m^(-1/5). Throws std::invalid_argument below 10 points and
// std::domain_error on zero variance.
DensityGrid kernel_density(std::span<const double> series,
                           double bandwidth = 0.0);

struct AcfCross {
  std::vector<double> acf_x;    // lags 0..max_lag
  std::vector<double> acf_y;
  std::vector<double> ccf_pos;  // Corr(x_t, y_{t-h})
  std::vector<double> ccf_neg;  // Corr(x_{t-h}, y_t)
};

// Sample (cross-)correlations with full-sample variance denominators.
// Requires equal lengths exceeding max_lag + 10; throws std::domain_error
// when either series has zero variance.
AcfCross acf_cross(std::span<const double> x, std::span<const double> y,
                   int max_lag);

struct EigenRow {
  int date = 0;
  double eig_max = 0.0;
  double eig_min = 0.0;
};

// Per-date information-matrix eigenvalue pairs (sorted descending), as
// recorded on each fit.
std::vector<EigenRow> eigen_diagnostics(const FunctionalEstimate<2>& fe);

// Per-date optimum weighted log-likelihood values (NaN on failed dates).
std::vector<double> loglik_trace(const FunctionalEstimate<2>& fe);

struct SchemeResult {
  std::string label;
  WeightScheme scheme;
  FunctionalEstimate<2> estimates;
  std::vector<double> a_dev;   // a_hat(t) - a_t, dates t_min..horizon
  std::vector<double> r0_dev;  // R0_hat(t) - R0_t
  std::vector<int> flags;      // DateFlag values, aligned with the dates
  DeviationStats a_stats;
  DeviationStats r0_stats;
};

struct ReplicationResult {
  std::uint64_t seed = 0;  // derived per-replication simulation seed
  SimResult sim;
  std::vector<SchemeResult> schemes;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<ReplicationResult> reps;
};

// Full study: phase 1 simulates the replications (seed derived from the
// master seed by replication index), phase 2 fits every scheme on every
// replication. Both phases split their jobs across config.threads workers;
// results land in preassigned slots, so outputs are identical for any
// thread count. The first worker exception is rethrown.
ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace tlml
