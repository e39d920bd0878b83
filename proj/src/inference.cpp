#include "tlml/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tlml {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Prediction predict_counts(const RegressionFrame& frame, int date,
                          const Theta& theta) {
  const int last = frame.last_date();
  if (date < 1 || date > last + 1)
    throw std::invalid_argument("prediction date out of range");
  const double prev = frame.y[static_cast<std::size_t>(date) - 1];
  const Vec<2> z{{(frame.n - prev) * prev / frame.n, prev}};
  Prediction p;
  p.predicted = dot(z, theta.vec());
  if (date <= last)
    p.residual = frame.y[static_cast<std::size_t>(date)] - p.predicted;
  return p;
}

double ulr_limit_functional(std::span<const double> theta_grid,
                            KernelShape kernel, double c_frac) {
  const int g = static_cast<int>(theta_grid.size());
  if (g < 100)
    throw std::invalid_argument("theta grid needs at least 100 points");
  if (!(c_frac > 0.0) || c_frac > 1.0)
    throw std::invalid_argument("c_frac must lie in (0, 1]");

  // Node i sits at tau_i = i/(g-1); the integrand pairs the kernel with the
  // time-reversed path value theta(1 - tau), exact at the nodes.
  const auto node = [&](int i) { return static_cast<double>(i) / (g - 1); };
  const auto f = [&](int i) {
    return kernel_value(kernel, node(i)) *
           theta_grid[static_cast<std::size_t>(g - 1 - i)];
  };
  const auto w = [&](int i) { return kernel_value(kernel, node(i)); };

  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i + 1 < g; ++i) {
    const double t0 = node(i);
    const double t1 = node(i + 1);
    if (c_frac >= t1) {
      num += 0.5 * (f(i) + f(i + 1)) * (t1 - t0);
      den += 0.5 * (w(i) + w(i + 1)) * (t1 - t0);
    } else if (c_frac > t0) {
      // Last sliver [t0, c]: interpolate the integrand linearly.
      const double frac = (c_frac - t0) / (t1 - t0);
      const double fc = f(i) + (f(i + 1) - f(i)) * frac;
      const double wc = w(i) + (w(i + 1) - w(i)) * frac;
      num += 0.5 * (f(i) + fc) * (c_frac - t0);
      den += 0.5 * (w(i) + wc) * (c_frac - t0);
      break;
    } else {
      break;
    }
  }
  if (!(den > 0.0))
    throw std::domain_error("kernel mass vanishes on [0, c]");
  return num / den;
}

namespace {

struct OuProfile {
  double value = -std::numeric_limits<double>::infinity();
  double mu = 0.0;
  double v = 0.0;  // stationary variance eta^2 / (2k)
};

// Profile log-likelihood over the one-step autoregression rho: the mean and
// stationary variance have closed-form maximizers given rho.
OuProfile ou_profile(std::span<const double> x, double rho) {
  const int m = static_cast<int>(x.size()) - 1;  // transition count
  const int k_obs = m + 1;

  double diff_sum = 0.0;
  for (int t = 1; t <= m; ++t)
    diff_sum += x[static_cast<std::size_t>(t)] -
                rho * x[static_cast<std::size_t>(t) - 1];
  const double mu =
      (x[0] + diff_sum / (1.0 + rho)) / (1.0 + m * (1.0 - rho) / (1.0 + rho));

  double sse = 0.0;
  for (int t = 1; t <= m; ++t) {
    const double e = (x[static_cast<std::size_t>(t)] - mu) -
                     rho * (x[static_cast<std::size_t>(t) - 1] - mu);
    sse += e * e;
  }
  const double one_minus_r2 = (1.0 - rho) * (1.0 + rho);
  const double v = ((x[0] - mu) * (x[0] - mu) + sse / one_minus_r2) / k_obs;

  OuProfile p;
  p.mu = mu;
  p.v = v;
  if (v > 0.0)
    p.value = -0.5 * k_obs * std::log(v) - 0.5 * m * std::log(one_minus_r2);
  return p;
}

// Exact stationary-Gaussian log-likelihood in natural parameters, for the
// curvature-based standard errors.
double ou_loglik(std::span<const double> x, double delta, double mu, double k,
                 double eta) {
  if (!(k > 0.0) || !(eta > 0.0)) return -std::numeric_limits<double>::infinity();
  const int m = static_cast<int>(x.size()) - 1;
  const double rho = std::exp(-k * delta);
  const double v = eta * eta / (2.0 * k);
  const double cond_var = v * (1.0 - rho * rho);
  if (!(v > 0.0) || !(cond_var > 0.0))
    return -std::numeric_limits<double>::infinity();

  constexpr double kLog2Pi = 1.8378770664093454836;
  double ll = -0.5 * (kLog2Pi + std::log(v)) -
              (x[0] - mu) * (x[0] - mu) / (2.0 * v);
  for (int t = 1; t <= m; ++t) {
    const double e = (x[static_cast<std::size_t>(t)] - mu) -
                     rho * (x[static_cast<std::size_t>(t) - 1] - mu);
    ll += -0.5 * (kLog2Pi + std::log(cond_var)) - e * e / (2.0 * cond_var);
  }
  return ll;
}

// Solve a 3x3 symmetric system by Gauss elimination with partial pivoting;
// false when the matrix is numerically singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3>& b) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
          std::abs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
        pivot = r;
    if (a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)] == 0.0)
      return false;
    std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
    std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    const double inv_p =
        1.0 / a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double factor =
          a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] * inv_p;
      for (int c = col; c < 3; ++c)
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            factor * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
    }
  }
  for (int i = 0; i < 3; ++i)
    b[static_cast<std::size_t>(i)] /=
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return true;
}

}  // namespace

OuFit ou_fit(std::span<const double> values, double delta) {
  if (values.size() < 3)
    throw std::invalid_argument("ou_fit needs at least 3 observations");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");

  OuFit fit;
  fit.delta = delta;
  fit.se_mu = kNan;
  fit.se_k = kNan;
  fit.se_eta = kNan;

  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  var /= values.size();
  if (var <= 1e-30) {
    // Constant input: the noise scale sits on the zero boundary and the
    // mean-reversion speed is unidentified.
    fit.degenerate = true;
    fit.mu = mean;
    fit.k = kNan;
    fit.eta = 0.0;
    fit.rho = kNan;
    fit.loglik = kNan;
    return fit;
  }

  // Golden-section search of the profile likelihood on the open rho box.
  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-6;
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = kLo;
  double hi = kHi;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = ou_profile(values, x1).value;
  double f2 = ou_profile(values, x2).value;
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = ou_profile(values, x2).value;
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = ou_profile(values, x1).value;
    }
  }
  const double rho = 0.5 * (lo + hi);
  const OuProfile prof = ou_profile(values, rho);

  if (prof.v <= 1e-30) {
    fit.degenerate = true;
    fit.mu = prof.mu;
    fit.k = kNan;
    fit.eta = 0.0;
    fit.rho = rho;
    fit.loglik = kNan;
    return fit;
  }

  fit.rho = rho;
  fit.mu = prof.mu;
  fit.k = -std::log(rho) / delta;
  fit.eta = std::sqrt(2.0 * fit.k * prof.v);
  fit.loglik = ou_loglik(values, delta, fit.mu, fit.k, fit.eta);
  fit.converged = rho > 2.0 * kLo && rho < 1.0 - 2e-6;

  // Standard errors from a central finite-difference curvature in
  // (mu, k, eta); the covariance solves -H column by column.
  const std::array<double, 3> point{fit.mu, fit.k, fit.eta};
  std::array<double, 3> step{};
  for (int i = 0; i < 3; ++i)
    step[static_cast<std::size_t>(i)] =
        std::max(1e-5 * std::abs(point[static_cast<std::size_t>(i)]), 1e-8);
  const auto eval = [&](double dm, double dk, double de) {
    return ou_loglik(values, delta, point[0] + dm, point[1] + dk,
                     point[2] + de);
  };
  const double f0 = eval(0.0, 0.0, 0.0);
  std::array<std::array<double, 3>, 3> hess{};
  bool finite = std::isfinite(f0);
  for (int i = 0; i < 3 && finite; ++i) {
    std::array<double, 3> dp{};
    dp[static_cast<std::size_t>(i)] = step[static_cast<std::size_t>(i)];
    const double fp = eval(dp[0], dp[1], dp[2]);
    const double fm = eval(-dp[0], -dp[1], -dp[2]);
    hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] =
        (fp - 2.0 * f0 + fm) /
        (step[static_cast<std::size_t>(i)] * step[static_cast<std::size_t>(i)]);
    finite = finite && std::isfinite(fp) && std::isfinite(fm);
    for (int j = i + 1; j < 3 && finite; ++j) {
      std::array<double, 3> dq{};
      dq[static_cast<std::size_t>(j)] = step[static_cast<std::size_t>(j)];
      const double fpp = eval(dp[0] + dq[0], dp[1] + dq[1], dp[2] + dq[2]);
      const double fpm = eval(dp[0] - dq[0], dp[1] - dq[1], dp[2] - dq[2]);
      const double fmp = eval(dq[0] - dp[0], dq[1] - dp[1], dq[2] - dp[2]);
      const double fmm = eval(-dp[0] - dq[0], -dp[1] - dq[1], -dp[2] - dq[2]);
      const double mixed = (fpp - fpm - fmp + fmm) /
                           (4.0 * step[static_cast<std::size_t>(i)] *
                            step[static_cast<std::size_t>(j)]);
      hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = mixed;
      hess[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = mixed;
      finite = finite && std::isfinite(fpp) && std::isfinite(fpm) &&
               std::isfinite(fmp) && std::isfinite(fmm);
    }
  }
  if (finite) {
    std::array<std::array<double, 3>, 3> neg_h{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        neg_h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            -hess[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    std::array<double, 3> se{kNan, kNan, kNan};
    bool ok = true;
    for (int col = 0; col < 3 && ok; ++col) {
      std::array<double, 3> rhs{};
      rhs[static_cast<std::size_t>(col)] = 1.0;
      auto system = neg_h;
      ok = solve3(system, rhs);
      if (ok && rhs[static_cast<std::size_t>(col)] > 0.0)
        se[static_cast<std::size_t>(col)] =
            std::sqrt(rhs[static_cast<std::size_t>(col)]);
    }
    fit.se_mu = se[0];
    fit.se_k = se[1];
    fit.se_eta = se[2];
  }
  return fit;
}

OuFit ou_fit_grid(std::span<const double> c_grid,
                  std::span<const double> values) {
  if (c_grid.size() != values.size())
    throw std::invalid_argument("c grid and values differ in length");
  if (c_grid.size() < 3)
    throw std::invalid_argument("ou_fit needs at least 3 observations");
  const double delta = c_grid[1] - c_grid[0];
  if (!(delta > 0.0))
    throw std::invalid_argument("c grid must be strictly increasing");
  for (std::size_t i = 1; i < c_grid.size(); ++i) {
    const double gap = c_grid[i] - c_grid[i - 1];
    if (std::abs(gap - delta) > 1e-6 * std::max(delta, 1.0))
      throw std::invalid_argument("c grid must be equally spaced");
  }
  return ou_fit(values, delta);
}

UlrBridge make_ulr_bridge(std::span<const double> c_grid,
                          std::span<const double> theta_at_c) {
  if (c_grid.empty() || !(c_grid.front() > 0.0) ||
      c_grid.back() > 1.0 + 1e-12)
    throw std::invalid_argument("c grid must lie within (0, 1]");
  UlrBridge bridge;
  bridge.c_grid.assign(c_grid.begin(), c_grid.end());
  bridge.theta_at_c.assign(theta_at_c.begin(), theta_at_c.end());
  bridge.ou = ou_fit_grid(c_grid, theta_at_c);
  return bridge;
}

std::vector<double> kernel_theta_path(std::span<const double> y,
                                      KernelShape kernel,
                                      std::span<const double> c_grid) {
  if (y.empty()) throw std::invalid_argument("empty series");
  std::vector<double> out;
  out.reserve(c_grid.size());
  for (double c : c_grid) {
    if (!(c > 0.0) || c > 1.0)
      throw std::invalid_argument("c values must lie in (0, 1]");
    const KernelScaled scheme{kernel, c, static_cast<int>(y.size())};
    out.push_back(gaussian_closed_form(y, WeightScheme{scheme}));
  }
  return out;
}

}  // namespace tlml
