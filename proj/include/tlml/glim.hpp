#pragma once

#include <utility>
#include <vector>

#include "tlml/linalg.hpp"
#include "tlml/sis.hpp"

// Likelihood families: dated log-density, score, Hessian and third
// derivative for the Poisson GLIM, the Poisson-Gaussian GLIM, and the scalar
// Gaussian mean-heterogeneity model. Additive constants are dropped
// consistently within each family.

namespace tlml {

// Evaluation rejects intensities below this floor instead of clamping them,
// so solver pathologies surface as domain errors.
inline constexpr double kIntensityFloor = 1e-12;

// Coefficient pair (a, 1 - c) of the count regression.
struct Theta {
  double a_coef = 0.5;
  double one_minus_c = 0.5;

  Vec<2> vec() const { return Vec<2>{{a_coef, one_minus_c}}; }
  static Theta from(const Vec<2>& v) { return Theta{v[0], v[1]}; }
};

template <int D>
struct Derivs {
  Vec<D> score;
  Mat<D> hessian;
  Ten3<D> third;
};

// Pointwise family evaluations; z is the lagged regressor pair.
double poisson_logl(double y, const Vec<2>& z, const Vec<2>& theta);
Derivs<2> poisson_derivatives(double y, const Vec<2>& z, const Vec<2>& theta);

double poisson_gaussian_logl(double y, const Vec<2>& z, const Vec<2>& theta);
std::pair<double, Vec<2>> poisson_gaussian_logl_and_score(double y,
                                                          const Vec<2>& z,
                                                          const Vec<2>& theta);
Derivs<2> poisson_gaussian_derivatives(double y, const Vec<2>& z,
                                       const Vec<2>& theta);

double gaussian_mean_logl(double y, double theta);

// Observed counts with the lagged regressors z_{t-1} built on demand:
// z_{t-1} = [(n - y_{t-1}) y_{t-1} / n, y_{t-1}].
struct RegressionFrame {
  std::vector<double> y;
  double n = 0.0;

  static RegressionFrame from_counts(std::vector<double> counts, double n);
  static RegressionFrame from_path(const EpidemicPath& path);

  // Regressor for date t (uses y_{t-1}); valid for 1 <= t <= last_date().
  Vec<2> regressor(int t) const {
    const double prev = y[static_cast<std::size_t>(t) - 1];
    return Vec<2>{{(n - prev) * prev / n, prev}};
  }
  int last_date() const { return static_cast<int>(y.size()) - 1; }
};

// Model wrappers share one contract: dim, first_date()/last_date(), and
// dated logl/derivatives. Dates index the observation explained by the
// model; families with a lagged regressor start at 1.
struct PoissonGlim {
  static constexpr int dim = 2;
  static constexpr const char* name = "poisson";
  const RegressionFrame* frame = nullptr;

  int first_date() const { return 1; }
  int last_date() const { return frame->last_date(); }
  double logl(int t, const Vec<2>& theta) const;
  Derivs<2> derivatives(int t, const Vec<2>& theta) const;
};

struct PoissonGaussianGlim {
  static constexpr int dim = 2;
  static constexpr const char* name = "poisson_gaussian";
  const RegressionFrame* frame = nullptr;

  int first_date() const { return 1; }
  int last_date() const { return frame->last_date(); }
  double logl(int t, const Vec<2>& theta) const;
  Derivs<2> derivatives(int t, const Vec<2>& theta) const;
};

struct GaussianMean {
  static constexpr int dim = 1;
  static constexpr const char* name = "gaussian_mean";
  const std::vector<double>* data = nullptr;

  int first_date() const { return 0; }
  int last_date() const { return static_cast<int>(data->size()) - 1; }
  double logl(int t, const Vec<1>& theta) const {
    return gaussian_mean_logl((*data)[static_cast<std::size_t>(t)], theta[0]);
  }
  Derivs<1> derivatives(int t, const Vec<1>& theta) const {
    Derivs<1> d;
    d.score[0] = (*data)[static_cast<std::size_t>(t)] - theta[0];
    d.hessian(0, 0) = -1.0;
    d.third(0, 0, 0) = 0.0;
    return d;
  }
};

}  // namespace tlml
