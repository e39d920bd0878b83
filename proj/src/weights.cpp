#include "tlml/weights.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tlml {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void validate_scheme(const WeightScheme& scheme) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Rolling>) {
          if (s.window < 1)
            throw std::invalid_argument("rolling window must be >= 1");
        } else if constexpr (std::is_same_v<S, Geometric>) {
          if (!(s.rho > 0.0 && s.rho < 1.0))
            throw std::invalid_argument("geometric rho must lie in (0,1)");
        } else if constexpr (std::is_same_v<S, Hyperbolic>) {
          if (!(s.exponent > 0.0))
            throw std::invalid_argument("hyperbolic exponent must be > 0");
        } else if constexpr (std::is_same_v<S, KernelScaled>) {
          if (!(s.c_frac > 0.0 && s.c_frac <= 1.0))
            throw std::invalid_argument("kernel c_frac must lie in (0,1]");
          if (s.t_ref < 1)
            throw std::invalid_argument("kernel t_ref must be >= 1");
        }
      },
      scheme);
}

double kernel_value(KernelShape shape, double u) {
  if (u < 0.0 || u > 1.0) return 0.0;
  switch (shape) {
    case KernelShape::uniform:
      return 1.0;
    case KernelShape::triangular:
      return 1.0 - u;
    case KernelShape::epanechnikov:
      return 0.75 * (1.0 - u * u);
  }
  return 0.0;
}

double weight(const WeightScheme& scheme, int h) {
  if (h < 0) throw std::invalid_argument("weight lag must be >= 0");
  return std::visit(
      [h](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Uniform>) {
          return 1.0;
        } else if constexpr (std::is_same_v<S, Rolling>) {
          return h < s.window ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<S, Geometric>) {
          return std::pow(s.rho, h);
        } else if constexpr (std::is_same_v<S, Hyperbolic>) {
          return h == 0 ? 1.0 : std::pow(static_cast<double>(h), -s.exponent);
        } else {
          const int cutoff =
              static_cast<int>(std::floor(s.c_frac * s.t_ref));
          if (h > cutoff) return 0.0;
          return kernel_value(s.kernel,
                              static_cast<double>(h) / s.t_ref);
        }
      },
      scheme);
}

WeightSums cumulated_sums(const WeightScheme& scheme, int horizon,
                          double mixing) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(mixing >= 0.0 && mixing < 1.0))
    throw std::invalid_argument("mixing rate must lie in [0,1)");

  std::vector<double> w(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) w[h] = weight(scheme, h);

  WeightSums sums;
  sums.horizon = horizon;
  sums.mixing = mixing;
  for (int h = 0; h < horizon; ++h) {
    sums.w_sum += w[h];
    sums.w2_sum += w[h] * w[h];
  }

  if (mixing == 0.0) {
    sums.w2_mixed = sums.w2_sum;
    return sums;
  }

  if (horizon <= 10000) {
    // Exact double loop; cross terms folded by symmetry.
    std::vector<double> rp(static_cast<std::size_t>(horizon));
    rp[0] = 1.0;
    for (int d = 1; d < horizon; ++d) rp[d] = rp[d - 1] * mixing;
    double total = sums.w2_sum;
    for (int h = 0; h < horizon; ++h) {
      double cross = 0.0;
      for (int k = h + 1; k < horizon; ++k) cross += w[k] * rp[k - h];
      total += 2.0 * w[h] * cross;
    }
    sums.w2_mixed = total;
    return sums;
  }

  // O(horizon) backward recursion: s[h] = sum_{k>h} w(k) r^(k-h) satisfies
  // s[h] = r (w(h+1) + s[h+1]).
  double s = 0.0;
  double cross = 0.0;
  for (int h = horizon - 2; h >= 0; --h) {
    s = mixing * (w[h + 1] + s);
    cross += w[h] * s;
  }
  sums.w2_mixed = sums.w2_sum + 2.0 * cross;
  return sums;
}

double consistency_ratio(const WeightScheme& scheme, int horizon,
                         double mixing) {
  const WeightSums sums = cumulated_sums(scheme, horizon, mixing);
  if (!(sums.w_sum > 0.0))
    throw std::domain_error("consistency ratio needs a positive weight sum");
  return sums.w2_mixed / (sums.w_sum * sums.w_sum);
}

std::string scheme_label(const WeightScheme& scheme) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Uniform>) {
          return "uniform";
        } else if constexpr (std::is_same_v<S, Rolling>) {
          return "rolling_" + std::to_string(s.window);
        } else if constexpr (std::is_same_v<S, Geometric>) {
          return "geom_" + format_double(s.rho);
        } else if constexpr (std::is_same_v<S, Hyperbolic>) {
          return "hyper_" + format_double(s.exponent);
        } else {
          const char* shape = s.kernel == KernelShape::uniform ? "uniform"
                              : s.kernel == KernelShape::triangular
                                  ? "triangular"
                                  : "epanechnikov";
          return std::string("kernel_") + shape + "_" +
                 format_double(s.c_frac);
        }
      },
      scheme);
}

}  // namespace tlml
