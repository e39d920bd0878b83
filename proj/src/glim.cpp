#include "tlml/glim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tlml {

namespace {

double intensity_or_throw(const Vec<2>& z, const Vec<2>& theta) {
  const double lambda = dot(z, theta);
  if (!(lambda >= kIntensityFloor))
    throw std::domain_error("nonpositive intensity (lambda = " +
                            std::to_string(lambda) + ")");
  return lambda;
}

Ten3<2> cubed_outer(const Vec<2>& z, double g) {
  // Evaluate each distinct index multiset once so the tensor comes out
  // exactly symmetric instead of symmetric only up to rounding order.
  Ten3<2> t;
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      for (int k = j; k < 2; ++k) {
        const double v = g * z[i] * z[j] * z[k];
        t(i, j, k) = t(i, k, j) = t(j, i, k) = v;
        t(j, k, i) = t(k, i, j) = t(k, j, i) = v;
      }
  return t;
}

[[noreturn]] void rethrow_with_date(const std::domain_error& e, int t) {
  throw std::domain_error(std::string(e.what()) + " at date " +
                          std::to_string(t));
}

}  // namespace

double poisson_logl(double y, const Vec<2>& z, const Vec<2>& theta) {
  const double lambda = intensity_or_throw(z, theta);
  return -lambda + y * std::log(lambda);
}

Derivs<2> poisson_derivatives(double y, const Vec<2>& z, const Vec<2>& theta) {
  const double lambda = intensity_or_throw(z, theta);
  Derivs<2> d;
  d.score = z * (y / lambda - 1.0);
  d.hessian = outer(z, z) * (-y / (lambda * lambda));
  d.third = cubed_outer(z, 2.0 * y / (lambda * lambda * lambda));
  return d;
}

double poisson_gaussian_logl(double y, const Vec<2>& z, const Vec<2>& theta) {
  const double lambda = intensity_or_throw(z, theta);
  const double resid = y - lambda;
  return -0.5 * std::log(lambda) - resid * resid / (2.0 * lambda);
}

std::pair<double, Vec<2>> poisson_gaussian_logl_and_score(
    double y, const Vec<2>& z, const Vec<2>& theta) {
  const double lambda = intensity_or_throw(z, theta);
  const double resid = y - lambda;
  const double logl = -0.5 * std::log(lambda) - resid * resid / (2.0 * lambda);
  // d logl / d lambda with E(y^2) = lambda + lambda^2 substituted.
  const double g =
      (y * y - lambda - lambda * lambda) / (2.0 * lambda * lambda);
  return {logl, z * g};
}

Derivs<2> poisson_gaussian_derivatives(double y, const Vec<2>& z,
                                       const Vec<2>& theta) {
  const double lambda = intensity_or_throw(z, theta);
  const double l2 = lambda * lambda;
  Derivs<2> d;
  d.score = z * ((y * y - lambda - l2) / (2.0 * l2));
  d.hessian = outer(z, z) * ((lambda - 2.0 * y * y) / (2.0 * l2 * lambda));
  d.third = cubed_outer(z, (3.0 * y * y - lambda) / (l2 * l2));
  return d;
}

double gaussian_mean_logl(double y, double theta) {
  const double resid = y - theta;
  return -0.5 * resid * resid;
}

RegressionFrame RegressionFrame::from_counts(std::vector<double> counts,
                                             double n) {
  if (!(n > 0.0)) throw std::invalid_argument("population must be > 0");
  for (double v : counts)
    if (!(v >= 0.0 && v <= n))
      throw std::invalid_argument("counts must lie in [0, n]");
  RegressionFrame frame;
  frame.y = std::move(counts);
  frame.n = n;
  return frame;
}

RegressionFrame RegressionFrame::from_path(const EpidemicPath& path) {
  std::vector<double> counts(path.n2.size());
  for (std::size_t i = 0; i < path.n2.size(); ++i)
    counts[i] = static_cast<double>(path.n2[i]);
  return from_counts(std::move(counts),
                     static_cast<double>(path.population));
}

double PoissonGlim::logl(int t, const Vec<2>& theta) const {
  try {
    return poisson_logl(frame->y[static_cast<std::size_t>(t)],
                        frame->regressor(t), theta);
  } catch (const std::domain_error& e) {
    rethrow_with_date(e, t);
  }
}

Derivs<2> PoissonGlim::derivatives(int t, const Vec<2>& theta) const {
  try {
    return poisson_derivatives(frame->y[static_cast<std::size_t>(t)],
                               frame->regressor(t), theta);
  } catch (const std::domain_error& e) {
    rethrow_with_date(e, t);
  }
}

double PoissonGaussianGlim::logl(int t, const Vec<2>& theta) const {
  try {
    return poisson_gaussian_logl(frame->y[static_cast<std::size_t>(t)],
                                 frame->regressor(t), theta);
  } catch (const std::domain_error& e) {
    rethrow_with_date(e, t);
  }
}

Derivs<2> PoissonGaussianGlim::derivatives(int t, const Vec<2>& theta) const {
  try {
    return poisson_gaussian_derivatives(frame->y[static_cast<std::size_t>(t)],
                                        frame->regressor(t), theta);
  } catch (const std::domain_error& e) {
    rethrow_with_date(e, t);
  }
}

}  // namespace tlml
