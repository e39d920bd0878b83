#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

// Tiny fixed-dimension dense types for the 1- and 2-parameter families.
// Everything is by-value and closed-form; no external linear algebra needed.

namespace tlml {

template <int D>
struct Vec {
  std::array<double, D> v{};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < D; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < D; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < D; ++i) v[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }

  friend double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a.v[i] * b.v[i];
    return s;
  }

  double norm() const { return std::sqrt(dot(*this, *this)); }
};

template <int D>
struct Mat {
  // Row-major.
  std::array<double, D * D> m{};

  double& operator()(int i, int j) { return m[static_cast<std::size_t>(i * D + j)]; }
  double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * D + j)]; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < D * D; ++i) m[i] += o.m[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < D * D; ++i) m[i] -= o.m[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < D * D; ++i) m[i] *= s;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  friend Vec<D> operator*(const Mat& a, const Vec<D>& x) {
    Vec<D> y;
    for (int i = 0; i < D; ++i) {
      double s = 0.0;
      for (int j = 0; j < D; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat c;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        double s = 0.0;
        for (int k = 0; k < D; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    return c;
  }

  Mat transpose() const {
    Mat t;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double det() const {
    static_assert(D <= 2);
    if constexpr (D == 1) return m[0];
    else return m[0] * m[3] - m[1] * m[2];
  }

  double max_abs() const {
    double r = 0.0;
    for (int i = 0; i < D * D; ++i) r = std::max(r, std::abs(m[i]));
    return r;
  }
};

// Rank-one outer product x y'.
template <int D>
Mat<D> outer(const Vec<D>& x, const Vec<D>& y) {
  Mat<D> a;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = x[i] * y[j];
  return a;
}

template <int D>
Mat<D> identity() {
  Mat<D> a;
  for (int i = 0; i < D; ++i) a(i, i) = 1.0;
  return a;
}

// Symmetric 3-tensor of third derivatives, stored dense.
template <int D>
struct Ten3 {
  std::array<double, D * D * D> t{};

  double& operator()(int i, int j, int k) {
    return t[static_cast<std::size_t>((i * D + j) * D + k)];
  }
  double operator()(int i, int j, int k) const {
    return t[static_cast<std::size_t>((i * D + j) * D + k)];
  }

  Ten3& operator+=(const Ten3& o) {
    for (int i = 0; i < D * D * D; ++i) t[i] += o.t[i];
    return *this;
  }
  Ten3& operator*=(double s) {
    for (int i = 0; i < D * D * D; ++i) t[i] *= s;
    return *this;
  }
};

// Closed-form solve of A x = b for D in {1, 2}. Throws on a numerically
// singular A; callers that need a fallback should test is_invertible first.
template <int D>
bool is_invertible(const Mat<D>& a, double rel_tol = 1e-13) {
  const double scale = a.max_abs();
  if (scale == 0.0) return false;
  if constexpr (D == 1) return std::abs(a.m[0]) > rel_tol * scale;
  else return std::abs(a.det()) > rel_tol * scale * scale;
}

template <int D>
Vec<D> solve(const Mat<D>& a, const Vec<D>& b) {
  static_assert(D <= 2);
  if (!is_invertible(a)) throw std::domain_error("singular matrix in solve");
  if constexpr (D == 1) {
    return Vec<1>{{b[0] / a.m[0]}};
  } else {
    const double d = a.det();
    Vec<2> x;
    x[0] = (a(1, 1) * b[0] - a(0, 1) * b[1]) / d;
    x[1] = (a(0, 0) * b[1] - a(1, 0) * b[0]) / d;
    return x;
  }
}

template <int D>
Mat<D> inverse(const Mat<D>& a) {
  static_assert(D <= 2);
  if (!is_invertible(a)) throw std::domain_error("singular matrix in inverse");
  if constexpr (D == 1) {
    Mat<1> r;
    r.m[0] = 1.0 / a.m[0];
    return r;
  } else {
    const double d = a.det();
    Mat<2> r;
    r(0, 0) = a(1, 1) / d;
    r(0, 1) = -a(0, 1) / d;
    r(1, 0) = -a(1, 0) / d;
    r(1, 1) = a(0, 0) / d;
    return r;
  }
}

// Eigenvalues of a symmetric matrix, sorted descending. Closed form:
// for D=2 the pair (m +/- sqrt(((a-d)/2)^2 + b^2)) with m the mean of the
// diagonal. The off-diagonal is symmetrized first.
template <int D>
Vec<D> sym_eigenvalues(const Mat<D>& a) {
  static_assert(D <= 2);
  if constexpr (D == 1) {
    return Vec<1>{{a.m[0]}};
  } else {
    const double mean = 0.5 * (a(0, 0) + a(1, 1));
    const double half_gap = 0.5 * (a(0, 0) - a(1, 1));
    const double off = 0.5 * (a(0, 1) + a(1, 0));
    const double r = std::hypot(half_gap, off);
    return Vec<2>{{mean + r, mean - r}};
  }
}

}  // namespace tlml
