#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "tlml/estimator.hpp"
#include "tlml/glim.hpp"
#include "tlml/linalg.hpp"
#include "tlml/weights.hpp"

// Asymptotic inference for the weighted estimator: information matrix,
// score-autocovariance sandwich, confidence intervals, second-order bias
// terms, reproductive number, count prediction, the long-run weight-limit
// functional, and Ornstein-Uhlenbeck bridging of estimate sequences.

namespace tlml {

// Weighted Hessian-based information -sum w(h) H(t-h) / sum w(h).
template <class Model>
Mat<Model::dim> j_hat(const Model& model, const WeightScheme& scheme,
                      int date, const Vec<Model::dim>& theta) {
  return -1.0 * detail::weighted_derivs(model, scheme, date, theta).hessian;
}

// Sample autocovariances (centered) of the per-date score vectors, of the
// Hessian diagonals, and of the dated log-likelihood values, at lags
// 0..max_lag over dates first_date()..t_max.
template <int D>
struct ScoreAutocov {
  int max_lag = 0;
  int sample_size = 0;
  std::vector<Mat<D>> score_cov;      // I_h
  std::vector<Mat<D>> hess_diag_cov;  // I2_h, built from Hessian diagonals
  std::vector<double> logl_cov;       // gamma_h
  Vec<D> score_mean;
  Vec<D> hess_diag_mean;
  double logl_mean = 0.0;
};

template <class Model>
ScoreAutocov<Model::dim> score_autocov(const Model& model,
                                       const Vec<Model::dim>& theta,
                                       int max_lag, int t_max = -1) {
  constexpr int D = Model::dim;
  const int first = model.first_date();
  const int last = t_max < 0 ? model.last_date() : t_max;
  const int m = last - first + 1;
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  if (max_lag >= m)
    throw std::invalid_argument("max_lag must be below the sample length");

  std::vector<Vec<D>> scores(static_cast<std::size_t>(m));
  std::vector<Vec<D>> hess_diag(static_cast<std::size_t>(m));
  std::vector<double> logls(static_cast<std::size_t>(m));
  ScoreAutocov<D> out;
  out.max_lag = max_lag;
  out.sample_size = m;
  for (int t = first; t <= last; ++t) {
    const auto d = model.derivatives(t, theta);
    const std::size_t idx = static_cast<std::size_t>(t - first);
    scores[idx] = d.score;
    for (int i = 0; i < D; ++i) hess_diag[idx][i] = d.hessian(i, i);
    logls[idx] = model.logl(t, theta);
    out.score_mean += scores[idx];
    out.hess_diag_mean += hess_diag[idx];
    out.logl_mean += logls[idx];
  }
  const double inv_m = 1.0 / m;
  out.score_mean *= inv_m;
  out.hess_diag_mean *= inv_m;
  out.logl_mean *= inv_m;

  out.score_cov.resize(static_cast<std::size_t>(max_lag) + 1);
  out.hess_diag_cov.resize(static_cast<std::size_t>(max_lag) + 1);
  out.logl_cov.resize(static_cast<std::size_t>(max_lag) + 1);
  for (int h = 0; h <= max_lag; ++h) {
    Mat<D> sc;
    Mat<D> hc;
    double lc = 0.0;
    for (int idx = h; idx < m; ++idx) {
      const Vec<D> s1 = scores[idx] - out.score_mean;
      const Vec<D> s0 = scores[idx - h] - out.score_mean;
      sc += outer(s1, s0);
      const Vec<D> d1 = hess_diag[idx] - out.hess_diag_mean;
      const Vec<D> d0 = hess_diag[idx - h] - out.hess_diag_mean;
      hc += outer(d1, d0);
      lc += (logls[idx] - out.logl_mean) * (logls[idx - h] - out.logl_mean);
    }
    out.score_cov[h] = sc * inv_m;
    out.hess_diag_cov[h] = hc * inv_m;
    out.logl_cov[h] = lc * inv_m;
  }
  return out;
}

namespace detail {

// Cross-weight sums c_j = sum_h w(h) w(h+j) over a horizon of lags.
inline std::vector<double> cross_weight_sums(const WeightScheme& scheme,
                                             int horizon, int max_lag) {
  std::vector<double> w(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) w[h] = weight(scheme, h);
  std::vector<double> c(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int j = 0; j <= max_lag && j < horizon; ++j) {
    double s = 0.0;
    for (int h = 0; h + j < horizon; ++h) s += w[h] * w[h + j];
    c[j] = s;
  }
  return c;
}

}  // namespace detail

template <int D>
struct SandwichInfo {
  Mat<D> j_hat;
  Mat<D> i_t_w;  // double-weighted, Bartlett-tapered autocovariance sum
  double w_sum = 0.0;
  double w2_sum = 0.0;
  Mat<D> asy_cov;  // J^-1 I_T(w) J^-1 / W_T^2
  int truncation_lag = 0;
};

// Sandwich covariance of the fit: I_T(w) = c_0 I_0 + sum_j b_j c_j
// (I_j + I_j'), truncated at the autocovariance's max lag with a Bartlett
// taper b_j = 1 - j/(L+1). Throws std::domain_error on a singular J.
template <int D>
SandwichInfo<D> sandwich_covariance(const Fit<D>& fit,
                                    const ScoreAutocov<D>& autocov,
                                    const WeightScheme& scheme) {
  if (!is_invertible(fit.info))
    throw std::domain_error("singular information matrix in sandwich");
  const int horizon = fit.horizon;
  const int lag_cap = autocov.max_lag;
  SandwichInfo<D> out;
  out.j_hat = fit.info;
  out.truncation_lag = lag_cap;

  const auto c = detail::cross_weight_sums(scheme, horizon, lag_cap);
  for (int h = 0; h < horizon; ++h) {
    const double w = weight(scheme, h);
    out.w_sum += w;
  }
  out.w2_sum = c[0];

  out.i_t_w = autocov.score_cov[0] * c[0];
  for (int j = 1; j <= lag_cap; ++j) {
    const double taper = 1.0 - static_cast<double>(j) / (lag_cap + 1);
    const Mat<D> sym = autocov.score_cov[static_cast<std::size_t>(j)] +
                       autocov.score_cov[static_cast<std::size_t>(j)].transpose();
    out.i_t_w += sym * (taper * c[static_cast<std::size_t>(j)]);
  }

  const Mat<D> j_inv = inverse(fit.info);
  out.asy_cov = j_inv * out.i_t_w * j_inv * (1.0 / (out.w_sum * out.w_sum));
  return out;
}

template <int D>
struct IntervalSet {
  std::array<double, D> lo{};
  std::array<double, D> hi{};
  std::array<double, D> half{};
  bool available = false;
};

// theta_hat_j +/- level_mult * sqrt(W2)/W * sqrt((J^-1)_jj). Marked
// unavailable when J is not positive definite (quasi-collinearity signal).
template <int D>
IntervalSet<D> confidence_interval(const Fit<D>& fit, const WeightSums& sums,
                                   double level_mult = 2.0) {
  IntervalSet<D> ci;
  if (!fit.ok || !is_invertible(fit.info) ||
      !(fit.info_eigenvalues[D - 1] > 0.0))
    return ci;
  const Mat<D> j_inv = inverse(fit.info);
  const double scale = level_mult * std::sqrt(sums.w2_sum) / sums.w_sum;
  for (int i = 0; i < D; ++i) {
    if (!(j_inv(i, i) > 0.0)) return ci;
    ci.half[i] = scale * std::sqrt(j_inv(i, i));
    ci.lo[i] = fit.theta[i] - ci.half[i];
    ci.hi[i] = fit.theta[i] + ci.half[i];
  }
  ci.available = true;
  return ci;
}

template <int D>
struct BiasTerms {
  Vec<D> x_t;         // standardized weighted score per coordinate
  Vec<D> z_t;         // standardized weighted centered Hessian diagonal
  Vec<D> i_w;         // weighted score-autocovariance sum, diagonal
  Vec<D> i2_w;        // weighted Hessian-autocovariance sum, diagonal
  Vec<D> el3;         // sample mean of the diagonal third derivative
  Vec<D> correction;  // second-order adjustment per coordinate
  int truncation_lag = 0;
};

// Second-order expansion terms, coordinate by coordinate (the off-diagonal
// interaction is held at the fitted value). The correction is
//   -(I^1/2 I2^1/2 / (W J)^2) X Z - (1/2)(EL3/J)(I/(W^2 J^2)) X^2,
// which degenerates to exactly 0 for the Gaussian location family (zero
// third derivative and constant Hessian).
template <class Model>
BiasTerms<Model::dim> bias_terms(const Model& model,
                                 const WeightScheme& scheme, int date,
                                 const Fit<Model::dim>& fit,
                                 int max_lag = -1) {
  constexpr int D = Model::dim;
  const int first = model.first_date();
  const int horizon = date - first + 1;
  int lag = max_lag;
  if (lag < 0)
    lag = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(horizon))));
  if (lag >= horizon) lag = horizon - 1;

  const auto autocov = score_autocov(model, fit.theta, lag, date);
  const auto c = detail::cross_weight_sums(scheme, horizon, lag);

  BiasTerms<D> out;
  out.truncation_lag = lag;

  // Weighted sums of the realized scores and centered Hessian diagonals.
  Vec<D> score_sum;
  Vec<D> hess_sum;
  double w_sum = 0.0;
  for (int h = 0; h < horizon; ++h) {
    const double w = weight(scheme, h);
    if (w == 0.0) continue;
    const auto d = model.derivatives(date - h, fit.theta);
    score_sum += w * d.score;
    for (int i = 0; i < D; ++i)
      hess_sum[i] += w * (d.hessian(i, i) - autocov.hess_diag_mean[i]);
    w_sum += w;
  }

  Vec<D> el3_sum;
  for (int t = first; t <= date; ++t) {
    const auto d = model.derivatives(t, fit.theta);
    for (int i = 0; i < D; ++i) el3_sum[i] += d.third(i, i, i);
  }

  for (int i = 0; i < D; ++i) {
    double i_w = autocov.score_cov[0](i, i) * c[0];
    double i2_w = autocov.hess_diag_cov[0](i, i) * c[0];
    for (int j = 1; j <= lag; ++j) {
      const double taper = 1.0 - static_cast<double>(j) / (lag + 1);
      i_w += taper * c[static_cast<std::size_t>(j)] * 2.0 *
             autocov.score_cov[static_cast<std::size_t>(j)](i, i);
      i2_w += taper * c[static_cast<std::size_t>(j)] * 2.0 *
              autocov.hess_diag_cov[static_cast<std::size_t>(j)](i, i);
    }
    out.i_w[i] = i_w;
    out.i2_w[i] = i2_w;
    out.el3[i] = el3_sum[i] / horizon;

    const double j_ii = fit.info(i, i);
    if (j_ii == 0.0)
      throw std::domain_error("zero information diagonal in bias expansion");

    out.x_t[i] = i_w > 0.0 ? score_sum[i] / std::sqrt(i_w) : 0.0;
    out.z_t[i] = i2_w > 0.0 ? hess_sum[i] / std::sqrt(i2_w) : 0.0;

    const double wj = w_sum * j_ii;
    const double cross = i_w > 0.0 && i2_w > 0.0
                             ? -(std::sqrt(i_w) * std::sqrt(i2_w) / (wj * wj)) *
                                   out.x_t[i] * out.z_t[i]
                             : 0.0;
    const double curv = i_w > 0.0
                            ? -0.5 * (out.el3[i] / j_ii) *
                                  (i_w / (w_sum * w_sum * j_ii * j_ii)) *
                                  out.x_t[i] * out.x_t[i]
                            : 0.0;
    out.correction[i] = cross + curv;
  }
  return out;
}

inline double reproductive_number(const Theta& theta) {
  return theta.a_coef + theta.one_minus_c;
}

struct Prediction {
  double predicted = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
};

// One-step-ahead conditional mean z_{t-1}' theta; the residual is filled
// when y_t is observed (date <= last observed index).
Prediction predict_counts(const RegressionFrame& frame, int date,
                          const Theta& theta);

// Riemann (trapezoid) approximation of
//   B(c) = int_0^c w(tau) theta(1-tau) dtau / int_0^c w(tau) dtau
// for theta given on a uniform grid over [0,1] (inclusive endpoints).
double ulr_limit_functional(std::span<const double> theta_grid,
                            KernelShape kernel, double c_frac);

struct OuFit {
  double mu = 0.0;
  double k = 0.0;
  double eta = 0.0;
  double se_mu = 0.0;
  double se_k = 0.0;
  double se_eta = 0.0;
  double rho = 0.0;    // fitted one-step autoregression exp(-k * delta)
  double delta = 0.0;
  double loglik = 0.0;
  bool converged = false;
  bool degenerate = false;  // constant input; eta at the zero boundary
};

// Exact Gaussian ML for a stationary OU process observed at spacing delta
// (stationary initial term included): profile search over the one-step
// autoregression with closed-form mean and variance, standard errors from a
// finite-difference curvature of the log-likelihood in (mu, k, eta).
OuFit ou_fit(std::span<const double> values, double delta);

// As above with delta taken from an (approximately) equally spaced grid.
OuFit ou_fit_grid(std::span<const double> c_grid,
                  std::span<const double> values);

struct UlrBridge {
  std::vector<double> c_grid;
  std::vector<double> theta_at_c;
  OuFit ou;
};

// Bundles a sequence of per-fraction estimates with its OU fit. c_grid must
// be strictly increasing within (0,1] and equally spaced.
UlrBridge make_ulr_bridge(std::span<const double> c_grid,
                          std::span<const double> theta_at_c);

// Scalar-family helper: closed-form kernel-weighted estimates of a series
// at each fraction c, feeding make_ulr_bridge.
std::vector<double> kernel_theta_path(std::span<const double> y,
                                      KernelShape kernel,
                                      std::span<const double> c_grid);

}  // namespace tlml
