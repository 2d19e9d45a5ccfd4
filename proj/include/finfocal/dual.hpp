#pragma once

#include <array>
#include <cmath>
#include <type_traits>
#include <utility>

namespace finfocal {

// First-order dual number over an arbitrary scalar ring T. Nesting
// Dual<Dual<double>> etc. yields exact mixed fiber/base derivatives of the
// metric energy up to third order, which is all the Chern machinery needs.
template <class T>
struct Dual {
  T a{};  // value
  T b{};  // derivative

  Dual() = default;
  Dual(double v) : a(v), b() {}  // NOLINT: implicit lift of constants
  template <class U = T>
    requires(!std::is_same_v<U, double>)
  Dual(T v) : a(std::move(v)), b() {}  // NOLINT: lift one nesting level
  Dual(T v, T d) : a(std::move(v)), b(std::move(d)) {}

  Dual operator-() const { return {-a, -b}; }

  Dual& operator+=(const Dual& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    a -= o.a;
    b -= o.b;
    return *this;
  }
};

template <class T>
Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
  return {x.a + y.a, x.b + y.b};
}
template <class T>
Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
  return {x.a - y.a, x.b - y.b};
}
template <class T>
Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a};
}
template <class T>
Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  T q = x.a / y.a;
  return {q, (x.b - q * y.b) / y.a};
}

template <class T>
Dual<T> operator+(double s, const Dual<T>& x) {
  return Dual<T>(s) + x;
}
template <class T>
Dual<T> operator+(const Dual<T>& x, double s) {
  return x + Dual<T>(s);
}
template <class T>
Dual<T> operator-(double s, const Dual<T>& x) {
  return Dual<T>(s) - x;
}
template <class T>
Dual<T> operator-(const Dual<T>& x, double s) {
  return x - Dual<T>(s);
}
template <class T>
Dual<T> operator*(double s, const Dual<T>& x) {
  return {s * x.a, s * x.b};
}
template <class T>
Dual<T> operator*(const Dual<T>& x, double s) {
  return {x.a * s, x.b * s};
}
template <class T>
Dual<T> operator/(const Dual<T>& x, double s) {
  return {x.a / s, x.b / s};
}
template <class T>
Dual<T> operator/(double s, const Dual<T>& x) {
  return Dual<T>(s) / x;
}

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.a);
  return {s, x.b / (2.0 * s)};
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.a), x.b * cos(x.a)};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.a), -1.0 * (x.b * sin(x.a))};
}
template <class T>
Dual<T> tan(const Dual<T>& x) {
  T c = cos(x.a);
  return {tan(x.a), x.b / (c * c)};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.a);
  return {e, x.b * e};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  return {log(x.a), x.b / x.a};
}
template <class T>
Dual<T> pow(const Dual<T>& x, double p) {
  if (p == 0.0) return Dual<T>(1.0);  // avoids 0 * pow(0, -1) in the chain
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  T v = pow(x.a, p);
  return {v, p * (pow(x.a, p - 1.0) * x.b)};
}
// General exponent routed through exp/log; metric arguments are positive.
template <class T>
Dual<T> pow(const Dual<T>& x, const Dual<T>& y) {
  return exp(y * log(x));
}

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.a);
}

// ---------------------------------------------------------------------------
// Fixed-capacity vector/matrix for templated (dual-valued) metric code.
// Ambient dimension is at most 4 in this project; capacity 6 leaves headroom.
// ---------------------------------------------------------------------------

inline constexpr int kMaxDim = 6;

template <class T>
struct SVec {
  std::array<T, kMaxDim> d{};
  int n = 0;

  SVec() = default;
  explicit SVec(int size) : n(size) {}
  T& operator[](int i) { return d[static_cast<size_t>(i)]; }
  const T& operator[](int i) const { return d[static_cast<size_t>(i)]; }
  int size() const { return n; }
};

template <class T>
struct SMat {
  std::array<T, kMaxDim * kMaxDim> d{};
  int r = 0, c = 0;

  SMat() = default;
  SMat(int rows, int cols) : r(rows), c(cols) {}
  T& operator()(int i, int j) { return d[static_cast<size_t>(i * c + j)]; }
  const T& operator()(int i, int j) const { return d[static_cast<size_t>(i * c + j)]; }
};

template <class T>
SVec<T> lift_vec(const SVec<double>& x) {
  SVec<T> y(x.n);
  for (int i = 0; i < x.n; ++i) y[i] = T(x[i]);
  return y;
}

template <class TOut, class TIn>
SVec<TOut> lift_vec_t(const SVec<TIn>& x) {
  SVec<TOut> y(x.n);
  for (int i = 0; i < x.n; ++i) y[i] = TOut(x[i]);
  return y;
}

// Gaussian elimination with partial pivoting on the double value part.
// Dimensions are tiny (<= 4); this runs in generic scalar arithmetic.
template <class T>
SVec<T> solve_small(SMat<T> A, SVec<T> rhs) {
  int n = A.r;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(value_of(A(k, k)));
    for (int i = k + 1; i < n; ++i) {
      double m = std::abs(value_of(A(i, k)));
      if (m > best) {
        best = m;
        piv = i;
      }
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      T f = A(i, k) / A(k, k);
      for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  SVec<T> x(n);
  for (int i = n - 1; i >= 0; --i) {
    T s = rhs[i];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
    x[i] = s / A(i, i);
  }
  return x;
}

}  // namespace finfocal
