#include "tlml/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace tlml {

double gaussian_closed_form(std::span<const double> y,
                            const WeightScheme& scheme, int count) {
  if (count < 1 || count > static_cast<int>(y.size()))
    throw std::invalid_argument("observation count outside the sample");
  double num = 0.0;
  double den = 0.0;
  for (int h = 0; h < count; ++h) {
    const double w = weight(scheme, h);
    if (w == 0.0) continue;
    num += w * y[static_cast<std::size_t>(count - 1 - h)];
    den += w;
  }
  if (!(den > 0.0))
    throw std::domain_error("no observations carry positive weight");
  return num / den;
}

namespace {

// Pseudo-inverse of a symmetric PSD 2x2 via its closed-form spectral
// decomposition; eigenvalues below rel_tol * max eigenvalue are dropped.
Mat<2> sym_pseudo_inverse(const Mat<2>& a, double rel_tol = 1e-12) {
  const Vec<2> eig = sym_eigenvalues(a);
  const double cutoff = std::abs(eig[0]) * rel_tol;
  const double q = 0.5 * (a(0, 1) + a(1, 0));
  Mat<2> result;
  if (q == 0.0) {
    if (std::abs(a(0, 0)) > cutoff) result(0, 0) = 1.0 / a(0, 0);
    if (std::abs(a(1, 1)) > cutoff) result(1, 1) = 1.0 / a(1, 1);
    return result;
  }
  for (int idx = 0; idx < 2; ++idx) {
    const double lambda = eig[idx];
    if (std::abs(lambda) <= cutoff) continue;
    // Eigenvector of symmetric [[p, q], [q, s]] for eigenvalue lambda.
    Vec<2> v{{lambda - a(1, 1), q}};
    const double norm = v.norm();
    if (norm == 0.0) continue;
    v *= 1.0 / norm;
    result += outer(v, v) * (1.0 / lambda);
  }
  return result;
}

}  // namespace

OlsFit rolling_ols_fit(const RegressionFrame& frame, int window, int date) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (date < 1 || date > frame.last_date())
    throw std::invalid_argument("date outside the sample");
  const int start = std::max(1, date - window + 1);

  Mat<2> xtx;
  Vec<2> xty;
  OlsFit fit;
  for (int t = start; t <= date; ++t) {
    const Vec<2> z = frame.regressor(t);
    xtx += outer(z, z);
    xty += z * frame.y[static_cast<std::size_t>(t)];
    ++fit.n_used;
  }
  if (fit.n_used < 2 || !is_invertible(xtx)) {
    fit.singular = true;
    fit.coef = sym_pseudo_inverse(xtx) * xty;
    return fit;
  }
  fit.coef = solve(xtx, xty);
  return fit;
}

}  // namespace tlml
