#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlml/glim.hpp"
#include "tlml/linalg.hpp"
#include "tlml/weights.hpp"

// The locally weighted likelihood estimator: weighted objective, projected
// Newton solver with step-halving line search, one-step updating, the
// rolling-in-time functional estimator, the Gaussian closed form, and the
// rolling-OLS baseline.

namespace tlml {

struct FitOptions {
  double tol = 1e-8;      // convergence threshold on the projected score norm
  int max_iter = 100;
  double lower = 1e-6;    // box constraints, per coordinate
  double upper = 1.0 - 1e-6;
};

template <int D>
struct Fit {
  Vec<D> theta;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::array<bool, D> bound_hit{};
  int iterations = 0;
  double foc_norm = std::numeric_limits<double>::quiet_NaN();
  Mat<D> info;              // weighted Hessian-based information at theta
  Vec<D> info_eigenvalues;  // sorted descending
  int date = -1;
  int n_terms = 0;          // observations carrying positive weight
  int horizon = 0;          // lag count back to the family's first date
  bool used_gradient_fallback = false;
  bool ok = true;           // false when evaluation failed outright
  std::string error;
};

using TlmlFit = Fit<2>;

template <int D>
struct FunctionalEstimate {
  int t_min = 0;
  WeightScheme scheme;
  std::string family;
  std::vector<Fit<D>> fits;  // dates t_min..t_max in order
};

namespace detail {

template <int D>
Vec<D> clamp_box(Vec<D> v, const FitOptions& opts) {
  for (int i = 0; i < D; ++i) {
    if (v[i] < opts.lower) v[i] = opts.lower;
    if (v[i] > opts.upper) v[i] = opts.upper;
  }
  return v;
}

// Gradient with components pointing out of the box zeroed.
template <int D>
Vec<D> projected_gradient(const Vec<D>& theta, const Vec<D>& g,
                          const FitOptions& opts) {
  Vec<D> pg = g;
  for (int i = 0; i < D; ++i) {
    if (theta[i] <= opts.lower && g[i] < 0.0) pg[i] = 0.0;
    if (theta[i] >= opts.upper && g[i] > 0.0) pg[i] = 0.0;
  }
  return pg;
}

template <class Model>
struct LocalDerivs {
  double value = 0.0;
  Vec<Model::dim> score;
  Mat<Model::dim> hessian;
  double w_sum = 0.0;
  int n_terms = 0;
};

// Weighted value/score/Hessian of the date-T objective, normalized by the
// cumulated weight. Lags with exactly zero weight are skipped so finite
// windows never evaluate dates they do not use.
template <class Model>
LocalDerivs<Model> weighted_derivs(const Model& model,
                                   const WeightScheme& scheme, int date,
                                   const Vec<Model::dim>& theta) {
  if (date < model.first_date() || date > model.last_date())
    throw std::invalid_argument("estimation date outside the sample");
  LocalDerivs<Model> acc;
  const int max_h = date - model.first_date();
  for (int h = 0; h <= max_h; ++h) {
    const double w = weight(scheme, h);
    if (w == 0.0) continue;
    const int t = date - h;
    acc.value += w * model.logl(t, theta);
    const auto d = model.derivatives(t, theta);
    acc.score += w * d.score;
    acc.hessian += w * d.hessian;
    acc.w_sum += w;
    ++acc.n_terms;
  }
  if (acc.n_terms == 0)
    throw std::invalid_argument("no observations carry positive weight");
  const double inv = 1.0 / acc.w_sum;
  acc.value *= inv;
  acc.score *= inv;
  acc.hessian *= inv;
  return acc;
}

template <class Model>
double objective_only(const Model& model, const WeightScheme& scheme,
                      int date, const Vec<Model::dim>& theta) {
  double value = 0.0;
  double w_sum = 0.0;
  const int max_h = date - model.first_date();
  for (int h = 0; h <= max_h; ++h) {
    const double w = weight(scheme, h);
    if (w == 0.0) continue;
    value += w * model.logl(date - h, theta);
    w_sum += w;
  }
  return value / w_sum;
}

}  // namespace detail

template <class Model>
double weighted_objective(const Model& model, const WeightScheme& scheme,
                          int date, const Vec<Model::dim>& theta) {
  if (date < model.first_date() || date > model.last_date())
    throw std::invalid_argument("estimation date outside the sample");
  return detail::objective_only(model, scheme, date, theta);
}

// Maximizes the weighted objective over the box by Newton steps with
// step-halving on the objective; falls back to a projected gradient step
// when the Hessian is singular or the Newton direction is not an ascent
// direction. The objective never decreases across accepted iterations,
// except in the endgame: once the quadratic model predicts a remaining gain
// below the evaluation resolution of the weighted mean (summation rounding),
// steps are accepted within that noise band so the iterate can settle on the
// maximizer instead of stalling on unresolvable objective comparisons.
template <class Model>
Fit<Model::dim> tlml_fit(const Model& model, const WeightScheme& scheme,
                         int date, Vec<Model::dim> init,
                         const FitOptions& opts = {}) {
  constexpr int D = Model::dim;
  Fit<D> fit;
  fit.date = date;
  fit.horizon = date - model.first_date() + 1;
  Vec<D> theta = detail::clamp_box(init, opts);

  auto derivs = detail::weighted_derivs(model, scheme, date, theta);
  fit.n_terms = derivs.n_terms;
  double value = derivs.value;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Vec<D> pg = detail::projected_gradient(theta, derivs.score, opts);
    if (pg.norm() <= opts.tol) {
      fit.converged = true;
      break;
    }
    fit.iterations = iter + 1;

    // Coordinates resting on a bound with the score pushing outward are
    // pinned for this iteration; the Newton step is taken in the remaining
    // free coordinates (projected Newton). With no active bound this is the
    // plain Newton direction.
    std::array<bool, D> active{};
    int n_active = 0;
    for (int i = 0; i < D; ++i) {
      active[i] = (theta[i] <= opts.lower && derivs.score[i] < 0.0) ||
                  (theta[i] >= opts.upper && derivs.score[i] > 0.0);
      if (active[i]) ++n_active;
    }

    Vec<D> newton_dir{};
    bool have_newton = false;
    if (n_active == 0) {
      if (is_invertible(derivs.hessian)) {
        newton_dir = solve(derivs.hessian, -1.0 * derivs.score);
        have_newton = dot(newton_dir, derivs.score) > 0.0;
      }
    } else if constexpr (D == 2) {
      if (n_active == 1) {
        const int f = active[0] ? 1 : 0;
        const Mat<1> h_free{{derivs.hessian(f, f)}};
        if (is_invertible(h_free)) {
          newton_dir[f] = -derivs.score[f] / derivs.hessian(f, f);
          have_newton = dot(newton_dir, derivs.score) > 0.0;
        }
      }
    }

    // Evaluating the weighted mean of n_terms log-likelihood terms carries
    // summation rounding of this order; objective differences below it are
    // not resolvable and cannot rank candidate points.
    const double resolution =
        32.0 * std::numeric_limits<double>::epsilon() *
        std::max(1.0, std::abs(value)) *
        std::sqrt(static_cast<double>(std::max(1, fit.n_terms)));
    // Remaining gain predicted by the local model: the Newton decrement when
    // the Hessian is usable, the Cauchy bound along the projected score
    // otherwise. Below evaluation resolution the maximum is numerically
    // attained and objective comparisons are allowed the noise band.
    const double predicted_gain =
        0.5 * (have_newton ? dot(newton_dir, derivs.score) : dot(pg, pg));
    const bool endgame = predicted_gain <= resolution;

    // Try the Newton direction first; when its clamped line search fails
    // (typically with an active bound deflecting the step), retry along the
    // projected gradient, which is always a feasible ascent direction.
    bool accepted = false;
    for (int attempt = have_newton ? 0 : 1; attempt < 2 && !accepted;
         ++attempt) {
      const Vec<D>& direction = attempt == 0 ? newton_dir : pg;
      if (attempt == 1) fit.used_gradient_fallback = true;
      double step = 1.0;
      for (int half = 0; half < 60; ++half) {
        const Vec<D> candidate =
            detail::clamp_box<D>(theta + step * direction, opts);
        bool moved = false;
        for (int i = 0; i < D; ++i)
          if (candidate[i] != theta[i]) moved = true;
        if (!moved) break;
        double cand_value;
        try {
          cand_value = detail::objective_only(model, scheme, date, candidate);
        } catch (const std::domain_error&) {
          step *= 0.5;
          continue;
        }
        // Non-strict acceptance: near the optimum the true gain can sit
        // below rounding noise; equal-value moves along an ascent direction
        // still walk toward the maximizer and keep the objective
        // non-decreasing.
        if (cand_value >= value - (endgame ? resolution : 0.0)) {
          theta = candidate;
          value = cand_value;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) {
      // No resolvable improvement along any ascent direction: the iterate
      // already maximizes the objective to within evaluation precision.
      fit.converged = endgame;
      break;
    }

    derivs = detail::weighted_derivs(model, scheme, date, theta);
    const Vec<D> pg_new = detail::projected_gradient(theta, derivs.score, opts);
    if (pg_new.norm() <= opts.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.theta = theta;
  fit.loglik = value;
  fit.foc_norm = derivs.score.norm();
  for (int i = 0; i < D; ++i)
    fit.bound_hit[i] = (theta[i] <= opts.lower && derivs.score[i] <= 0.0) ||
                       (theta[i] >= opts.upper && derivs.score[i] >= 0.0);
  fit.info = -1.0 * derivs.hessian;
  fit.info_eigenvalues = sym_eigenvalues(fit.info);
  if (fit.n_terms < 2) {
    // Degenerate window: a single weighted observation cannot identify the
    // parameters; report the projected solution unconverged.
    fit.converged = false;
    fit.error = "degenerate window: fewer than 2 weighted observations";
  }
  return fit;
}

// One projected Newton-Raphson step on the date-T objective from the
// previous date's value; no line search on the Newton branch. A singular
// Hessian falls back to a projected gradient step with halving.
template <class Model>
Vec<Model::dim> ilml_step(const Model& model, const WeightScheme& scheme,
                          int date, const Vec<Model::dim>& theta_prev,
                          const FitOptions& opts = {}) {
  constexpr int D = Model::dim;
  const Vec<D> theta = detail::clamp_box(theta_prev, opts);
  const auto derivs = detail::weighted_derivs(model, scheme, date, theta);
  if (is_invertible(derivs.hessian)) {
    const Vec<D> step = solve(derivs.hessian, -1.0 * derivs.score);
    return detail::clamp_box<D>(theta + step, opts);
  }
  Vec<D> direction = detail::projected_gradient(theta, derivs.score, opts);
  double step = 1.0;
  for (int half = 0; half < 60; ++half) {
    const Vec<D> candidate = detail::clamp_box<D>(theta + step * direction, opts);
    try {
      if (detail::objective_only(model, scheme, date, candidate) >=
          derivs.value)
        return candidate;
    } catch (const std::domain_error&) {
    }
    step *= 0.5;
  }
  return theta;
}

// Per-date fits for t = t_min..t_max. Warm starting seeds each date with the
// previous date's estimate as an optimization hint; every date still runs
// the full solve to tolerance. Evaluation failures are recorded on the fit
// and the sequence continues.
template <class Model>
FunctionalEstimate<Model::dim> functional_estimate(
    const Model& model, const WeightScheme& scheme, int t_min, int t_max,
    bool warm_start, const FitOptions& opts = {}) {
  constexpr int D = Model::dim;
  if (t_min < 2) throw std::invalid_argument("t_min must be >= 2");
  if (t_max > model.last_date() || t_min > t_max)
    throw std::invalid_argument("invalid estimation range");

  FunctionalEstimate<D> result;
  result.t_min = t_min;
  result.scheme = scheme;
  result.family = Model::name;

  Vec<D> default_init;
  for (int i = 0; i < D; ++i) default_init[i] = 0.5;
  Vec<D> init = default_init;

  result.fits.reserve(static_cast<std::size_t>(t_max - t_min) + 1);
  for (int t = t_min; t <= t_max; ++t) {
    try {
      Fit<D> fit = tlml_fit(model, scheme, t, init, opts);
      if (warm_start && fit.ok) init = fit.theta;
      result.fits.push_back(std::move(fit));
    } catch (const std::exception& e) {
      Fit<D> failed;
      failed.ok = false;
      failed.converged = false;
      failed.date = t;
      failed.horizon = t - model.first_date() + 1;
      failed.error = e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (int i = 0; i < D; ++i) {
        failed.theta[i] = nan;
        failed.info_eigenvalues[i] = nan;
      }
      result.fits.push_back(std::move(failed));
      if (!warm_start) init = default_init;
    }
  }
  return result;
}

// Weighted average sum_h w(h) y[count-1-h] / sum_h w(h) over the last
// `count` observations (the exact scalar-Gaussian solution).
double gaussian_closed_form(std::span<const double> y,
                            const WeightScheme& scheme, int count);
inline double gaussian_closed_form(std::span<const double> y,
                                   const WeightScheme& scheme) {
  return gaussian_closed_form(y, scheme, static_cast<int>(y.size()));
}

struct OlsFit {
  Vec<2> coef;
  bool singular = false;
  int n_used = 0;
};

// Least squares of y_t on z_{t-1} (no intercept) over the last `window`
// dates ending at `date`; singular normal equations fall back to the
// pseudo-inverse solution and are flagged.
OlsFit rolling_ols_fit(const RegressionFrame& frame, int window, int date);

}  // namespace tlml
