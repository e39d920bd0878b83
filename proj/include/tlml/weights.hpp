#pragma once

#include <string>
#include <variant>

// Lag-weight schemes w(h) for the locally weighted likelihood, their
// cumulated sums, and the mixing-adjusted consistency diagnostic.

namespace tlml {

enum class KernelShape { uniform, triangular, epanechnikov };

struct Uniform {};

// w(h) = 1 for h < window, 0 beyond.
struct Rolling {
  int window = 1;
};

// w(h) = rho^h, rho in (0,1).
struct Geometric {
  double rho = 0.5;
};

// w(0) = 1 by convention, w(h) = h^(-exponent) for h >= 1.
struct Hyperbolic {
  double exponent = 1.0;
};

// w(h) = kernel(h / t_ref) for h <= floor(c_frac * t_ref), 0 beyond.
struct KernelScaled {
  KernelShape kernel = KernelShape::uniform;
  double c_frac = 1.0;
  int t_ref = 1;
};

using WeightScheme =
    std::variant<Uniform, Rolling, Geometric, Hyperbolic, KernelScaled>;

// Throws std::invalid_argument when the scheme parameters are out of range
// (window < 1, rho outside (0,1), exponent <= 0, c_frac outside (0,1],
// t_ref < 1).
void validate_scheme(const WeightScheme& scheme);

// One-sided kernel value on [0,1]; zero outside.
double kernel_value(KernelShape shape, double u);

// w(h) for h >= 0. Total function over valid schemes.
double weight(const WeightScheme& scheme, int h);

struct WeightSums {
  double w_sum = 0.0;    // sum of w(h), h = 0..horizon-1
  double w2_sum = 0.0;   // sum of w(h)^2
  double w2_mixed = 0.0; // double sum of w(h) w(k) r^|h-k|
  int horizon = 0;
  double mixing = 0.0;
};

// Sums over h = 0..horizon-1. The mixed sum uses the exact double loop up to
// horizon 10^4 and an O(horizon) backward recursion above; with mixing = 0
// it equals w2_sum bitwise.
WeightSums cumulated_sums(const WeightScheme& scheme, int horizon,
                          double mixing = 0.0);

// w2_mixed / w_sum^2: the estimator is in the consistent regime when this
// tends to 0 with the horizon.
double consistency_ratio(const WeightScheme& scheme, int horizon,
                         double mixing = 0.0);

// Short stable label used in file names, e.g. "geom_0.9".
std::string scheme_label(const WeightScheme& scheme);

}  // namespace tlml
