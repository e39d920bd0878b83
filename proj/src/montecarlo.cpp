#include "tlml/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "tlml/glim.hpp"
#include "tlml/rng.hpp"

namespace tlml {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Linear-interpolation sample quantile on a sorted range.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  const double h = q * static_cast<double>(n - 1);
  const std::size_t i0 = static_cast<std::size_t>(h);
  if (i0 + 1 >= n) return sorted.back();
  return sorted[i0] + (sorted[i0 + 1] - sorted[i0]) * (h - i0);
}

// Runs body(0..count-1) on up to `threads` workers pulling jobs from a
// shared counter. The job index determines where each result lands, so the
// output does not depend on scheduling; the first exception is rethrown.
template <class Fn>
void run_jobs(int count, int threads, Fn&& body) {
  if (count <= 0) return;
  const int workers = std::min(threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto loop = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

DeviationStats deviation_stats(std::span<const double> series,
                               std::span<const int> flags,
                               const TrimRule& rule) {
  if (!flags.empty() && flags.size() != series.size())
    throw std::invalid_argument("flags and series differ in length");
  if (!(rule.lower_q >= 0.0 && rule.lower_q < rule.upper_q &&
        rule.upper_q <= 1.0))
    throw std::invalid_argument("invalid trim quantiles");

  DeviationStats stats;
  stats.total = static_cast<int>(series.size());

  std::vector<double> pool;
  pool.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int flag = flags.empty() ? 0 : flags[i];
    const double v = series[i];
    if (flag == static_cast<int>(DateFlag::failed) || !std::isfinite(v)) {
      ++stats.failed;
      continue;
    }
    if (rule.drop_bound_hits && flag == static_cast<int>(DateFlag::bound)) {
      ++stats.trimmed;
      continue;
    }
    pool.push_back(v);
  }
  if (pool.size() < 10)
    throw std::invalid_argument("fewer than 10 usable points after flags");

  std::vector<double> sorted = pool;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted_quantile(sorted, rule.lower_q);
  const double hi = sorted_quantile(sorted, rule.upper_q);

  std::vector<double> kept;
  kept.reserve(pool.size());
  for (double v : pool) {
    if (v < lo || v > hi)
      ++stats.trimmed;
    else
      kept.push_back(v);
  }
  stats.retained = static_cast<int>(kept.size());
  if (stats.retained < 10)
    throw std::invalid_argument("fewer than 10 retained points after trim");

  double mean = 0.0;
  for (double v : kept) mean += v;
  mean /= stats.retained;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : kept) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= stats.retained;
  m3 /= stats.retained;
  m4 /= stats.retained;

  stats.mean = mean;
  stats.sd = std::sqrt(m2);
  if (m2 > 0.0) {
    stats.skewness = m3 / (m2 * std::sqrt(m2));
    stats.kurtosis = m4 / (m2 * m2);
  } else {
    stats.degenerate = true;
    stats.skewness = kNan;
    stats.kurtosis = kNan;
  }
  return stats;
}

DeviationStats deviation_stats(std::span<const double> series,
                               const TrimRule& rule) {
  return deviation_stats(series, std::span<const int>{}, rule);
}

DensityGrid kernel_density(std::span<const double> series, double bandwidth) {
  const std::size_t m = series.size();
  if (m < 10) throw std::invalid_argument("kernel_density needs >= 10 points");

  double mean = 0.0;
  double lo = series[0];
  double hi = series[0];
  for (double v : series) {
    mean += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m);
  if (!(var > 0.0)) throw std::domain_error("zero variance in kernel_density");

  DensityGrid grid;
  grid.bandwidth =
      bandwidth > 0.0
          ? bandwidth
          : 1.06 * std::sqrt(var) * std::pow(static_cast<double>(m), -0.2);

  constexpr int kGridSize = 512;
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  const double left = lo - 3.0 * grid.bandwidth;
  const double right = hi + 3.0 * grid.bandwidth;
  grid.x.resize(kGridSize);
  grid.density.resize(kGridSize);
  const double scale = kInvSqrt2Pi / (static_cast<double>(m) * grid.bandwidth);
  for (int i = 0; i < kGridSize; ++i) {
    const double xg = left + (right - left) * i / (kGridSize - 1);
    double acc = 0.0;
    for (double v : series) {
      const double u = (xg - v) / grid.bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    grid.x[static_cast<std::size_t>(i)] = xg;
    grid.density[static_cast<std::size_t>(i)] = scale * acc;
  }
  return grid;
}

AcfCross acf_cross(std::span<const double> x, std::span<const double> y,
                   int max_lag) {
  if (x.size() != y.size())
    throw std::invalid_argument("acf_cross series differ in length");
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  const int m = static_cast<int>(x.size());
  if (m <= max_lag + 10)
    throw std::invalid_argument("series too short for the requested lag");

  double mx = 0.0;
  double my = 0.0;
  for (int t = 0; t < m; ++t) {
    mx += x[static_cast<std::size_t>(t)];
    my += y[static_cast<std::size_t>(t)];
  }
  mx /= m;
  my /= m;
  double vx = 0.0;
  double vy = 0.0;
  for (int t = 0; t < m; ++t) {
    vx += (x[static_cast<std::size_t>(t)] - mx) *
          (x[static_cast<std::size_t>(t)] - mx);
    vy += (y[static_cast<std::size_t>(t)] - my) *
          (y[static_cast<std::size_t>(t)] - my);
  }
  vx /= m;
  vy /= m;
  if (!(vx > 0.0) || !(vy > 0.0))
    throw std::domain_error("degenerate variance in acf_cross");
  const double cross_denom = std::sqrt(vx * vy);

  AcfCross out;
  out.acf_x.resize(static_cast<std::size_t>(max_lag) + 1);
  out.acf_y.resize(static_cast<std::size_t>(max_lag) + 1);
  out.ccf_pos.resize(static_cast<std::size_t>(max_lag) + 1);
  out.ccf_neg.resize(static_cast<std::size_t>(max_lag) + 1);
  for (int h = 0; h <= max_lag; ++h) {
    double axx = 0.0;
    double ayy = 0.0;
    double cp = 0.0;
    double cn = 0.0;
    for (int t = h; t < m; ++t) {
      const double xt = x[static_cast<std::size_t>(t)] - mx;
      const double xl = x[static_cast<std::size_t>(t - h)] - mx;
      const double yt = y[static_cast<std::size_t>(t)] - my;
      const double yl = y[static_cast<std::size_t>(t - h)] - my;
      axx += xt * xl;
      ayy += yt * yl;
      cp += xt * yl;
      cn += xl * yt;
    }
    out.acf_x[static_cast<std::size_t>(h)] = axx / m / vx;
    out.acf_y[static_cast<std::size_t>(h)] = ayy / m / vy;
    out.ccf_pos[static_cast<std::size_t>(h)] = cp / m / cross_denom;
    out.ccf_neg[static_cast<std::size_t>(h)] = cn / m / cross_denom;
  }
  return out;
}

std::vector<EigenRow> eigen_diagnostics(const FunctionalEstimate<2>& fe) {
  std::vector<EigenRow> rows;
  rows.reserve(fe.fits.size());
  for (const auto& fit : fe.fits)
    rows.push_back({fit.date, fit.info_eigenvalues[0], fit.info_eigenvalues[1]});
  return rows;
}

std::vector<double> loglik_trace(const FunctionalEstimate<2>& fe) {
  std::vector<double> values;
  values.reserve(fe.fits.size());
  for (const auto& fit : fe.fits) values.push_back(fit.loglik);
  return values;
}

namespace {

// Deviation summary that degrades gracefully: windows dominated by corner
// solutions or failed fits can leave fewer than 10 usable dates, and a
// scenario sweep must still report the bucket counts for such schemes
// instead of aborting the whole run.
DeviationStats stats_or_flagged(std::span<const double> series,
                                std::span<const int> flags) {
  try {
    return deviation_stats(series, flags);
  } catch (const std::invalid_argument&) {
    DeviationStats stats;
    stats.total = static_cast<int>(series.size());
    const TrimRule rule{};
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (flags[i] == static_cast<int>(DateFlag::failed) ||
          !std::isfinite(series[i]))
        ++stats.failed;
      else if (rule.drop_bound_hits &&
               flags[i] == static_cast<int>(DateFlag::bound))
        ++stats.trimmed;
      else
        ++stats.retained;
    }
    stats.mean = kNan;
    stats.sd = kNan;
    stats.skewness = kNan;
    stats.kurtosis = kNan;
    stats.degenerate = true;
    return stats;
  }
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  if (config.population < 2)
    throw std::invalid_argument("population must be at least 2");
  if (config.initial_infected <= 0 ||
      config.initial_infected >= config.population)
    throw std::invalid_argument("initial infected must lie in (0, population)");
  if (config.t_min < 2)
    throw std::invalid_argument("t_min must be >= 2");
  if (config.horizon < config.t_min)
    throw std::invalid_argument("horizon must reach t_min");
  if (config.replications < 1)
    throw std::invalid_argument("replications must be >= 1");
  if (config.threads < 1)
    throw std::invalid_argument("threads must be >= 1");
  if (config.schemes.empty())
    throw std::invalid_argument("at least one weight scheme required");
  std::set<std::string> labels;
  for (const auto& scheme : config.schemes) {
    validate_scheme(scheme);
    if (!labels.insert(scheme_label(scheme)).second)
      throw std::invalid_argument("duplicate weight scheme " +
                                  scheme_label(scheme));
  }

  ScenarioResult result;
  result.config = config;
  const int n_reps = config.replications;
  const int n_schemes = static_cast<int>(config.schemes.size());
  result.reps.resize(static_cast<std::size_t>(n_reps));

  // Phase 1: independent path simulations, one derived seed per replication.
  run_jobs(n_reps, config.threads, [&](int rep) {
    auto& slot = result.reps[static_cast<std::size_t>(rep)];
    slot.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(rep),
                            0);
    slot.sim = simulate_epidemic(config.dynamics, config.population,
                                 config.initial_infected, config.horizon,
                                 config.law, slot.seed);
    slot.schemes.resize(static_cast<std::size_t>(n_schemes));
  });

  // Shared read-only frames; estimation always uses the Poisson working
  // likelihood regardless of the simulation law.
  std::vector<RegressionFrame> frames(static_cast<std::size_t>(n_reps));
  for (int rep = 0; rep < n_reps; ++rep)
    frames[static_cast<std::size_t>(rep)] =
        RegressionFrame::from_path(result.reps[static_cast<std::size_t>(rep)].sim.path);

  // Phase 2: one job per (replication, scheme) pair.
  run_jobs(n_reps * n_schemes, config.threads, [&](int job) {
    const int rep = job / n_schemes;
    const int s = job % n_schemes;
    auto& rep_slot = result.reps[static_cast<std::size_t>(rep)];
    const auto& scheme = config.schemes[static_cast<std::size_t>(s)];

    PoissonGlim model{&frames[static_cast<std::size_t>(rep)]};
    SchemeResult out;
    out.label = scheme_label(scheme);
    out.scheme = scheme;
    out.estimates =
        functional_estimate(model, scheme, config.t_min, config.horizon,
                            config.warm_start, config.fit_options);

    const auto& params = rep_slot.sim.params;
    const std::size_t n_dates = out.estimates.fits.size();
    out.a_dev.resize(n_dates, kNan);
    out.r0_dev.resize(n_dates, kNan);
    out.flags.resize(n_dates, static_cast<int>(DateFlag::ok));
    for (std::size_t i = 0; i < n_dates; ++i) {
      const auto& fit = out.estimates.fits[i];
      const std::size_t t = static_cast<std::size_t>(fit.date);
      const double a_true = params.a[t];
      const double r0_true = params.a[t] + 1.0 - params.c[t];
      out.a_dev[i] = fit.theta[0] - a_true;
      out.r0_dev[i] = fit.theta[0] + fit.theta[1] - r0_true;
      if (!fit.ok || !fit.converged)
        out.flags[i] = static_cast<int>(DateFlag::failed);
      else if (fit.bound_hit[0] || fit.bound_hit[1])
        out.flags[i] = static_cast<int>(DateFlag::bound);
    }
    out.a_stats = stats_or_flagged(out.a_dev, out.flags);
    out.r0_stats = stats_or_flagged(out.r0_dev, out.flags);
    rep_slot.schemes[static_cast<std::size_t>(s)] = std::move(out);
  });

  return result;
}

}  // namespace tlml
