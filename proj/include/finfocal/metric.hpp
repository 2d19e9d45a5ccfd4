#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finfocal/common.hpp"
#include "finfocal/dual.hpp"
#include "finfocal/expr.hpp"

namespace finfocal {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Point {
  Vec coords;
};

struct Vector {
  Point base;
  Vec components;
};

struct Covector {
  Point base;
  Vec components;
};

struct SymmetricBilinear {
  Mat matrix;
};

enum class MetricKind {
  Euclidean,
  Riemannian,   // g_ij(x) coefficient expressions
  Randers,      // sqrt(a_ij v v) + b_i v
  Minkowski,    // user F^2(v), position independent
  AmbientEuclidean  // Euclidean inner product of an embedding ambient space
};

// A Finsler metric on a chart (or the ambient space of an embedded backend).
// Immutable after construction; all evaluations are pure.
class MetricModel {
 public:
  MetricModel() = default;  // empty shell; build through the factories
  static MetricModel euclidean(int n);
  // row-major n*n entries, expressions in x0..x{n-1}
  static MetricModel riemannian(int n, std::vector<Expr> g_entries);
  static MetricModel randers(int n, std::vector<Expr> a_entries, std::vector<Expr> b_entries);
  // L = F^2 as an expression in y0..y{n-1}; must be positively 2-homogeneous
  static MetricModel minkowski(int n, Expr f_squared);
  static MetricModel ambient_euclidean(int n);

  // F_bar(v) = F(-v)
  MetricModel reverse() const;

  int dim() const { return n_; }
  MetricKind kind() const { return kind_; }
  bool position_independent() const { return position_independent_; }
  bool is_quadratic() const {
    return kind_ == MetricKind::Euclidean || kind_ == MetricKind::Riemannian ||
           kind_ == MetricKind::AmbientEuclidean;
  }

  // L = F^2, the square energy. Generic over nested duals.
  template <class T>
  T energy(const SVec<T>& x, const SVec<T>& y) const {
    switch (kind_) {
      case MetricKind::Euclidean:
      case MetricKind::AmbientEuclidean: {
        T s(0.0);
        for (int i = 0; i < n_; ++i) s += y[i] * y[i];
        return s;
      }
      case MetricKind::Riemannian: {
        T s(0.0);
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j)
            s += coeff_g_[static_cast<size_t>(i * n_ + j)].eval(x, y) * (y[i] * y[j]);
        return s;
      }
      case MetricKind::Randers: {
        SVec<T> yy = y;
        if (reversed_)
          for (int i = 0; i < n_; ++i) yy[i] = -y[i];
        T q(0.0), lin(0.0);
        for (int i = 0; i < n_; ++i) {
          for (int j = 0; j < n_; ++j)
            q += coeff_a_[static_cast<size_t>(i * n_ + j)].eval(x, yy) * (yy[i] * yy[j]);
          lin += coeff_b_[static_cast<size_t>(i)].eval(x, yy) * yy[i];
        }
        T f = sqrt(q) + lin;
        return f * f;
      }
      case MetricKind::Minkowski: {
        if (!reversed_) return norm2_.eval(x, y);
        SVec<T> yy = y;
        for (int i = 0; i < n_; ++i) yy[i] = -y[i];
        return norm2_.eval(x, yy);
      }
    }
    throw ConfigError("bad metric kind");
  }

  double finsler(const Vec& x, const Vec& v) const;
  double finsler(const Point& p, const Vec& v) const { return finsler(p.coords, v); }

  // g_v as an n x n matrix; throws ZeroVector / NotPositiveDefinite.
  Mat fundamental_tensor_matrix(const Vec& x, const Vec& v) const;
  SymmetricBilinear fundamental_tensor(const Point& p, const Vector& v) const;

  // Generic fundamental tensor used inside the spray/connection pipeline.
  template <class T>
  SMat<T> g_tensor(const SVec<T>& x, const SVec<T>& y) const {
    using DD = Dual<Dual<T>>;
    const int n = n_;
    SMat<T> g(n, n);
    SVec<DD> X = lift_vec_t<DD>(x);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        SVec<DD> Y = lift_vec_t<DD>(y);
        Y[i].b.a = T(1.0);  // outer epsilon
        Y[j].a.b = T(1.0);  // inner epsilon
        T hij = energy(X, Y).b.b;
        g(i, j) = 0.5 * hij;
        g(j, i) = g(i, j);
      }
    }
    return g;
  }

  // C_v(x,y,z). Third fiber derivative of F^2/4, exact via duals.
  double cartan(const Vec& xbase, const Vec& v, const Vec& a, const Vec& b,
                const Vec& c) const;
  double cartan_tensor(const Point& p, const Vector& v, const Vector& x,
                       const Vector& y, const Vector& z) const;

  // Legendre transform and its inverse (damped Newton).
  Covector legendre(const Point& p, const Vector& v) const;
  Vector legendre_inverse(const Point& p, const Covector& xi) const;
  Vec legendre_components(const Vec& x, const Vec& v) const;
  Vec legendre_inverse_components(const Vec& x, const Vec& xi) const;

  // Construction-time validity probes (homogeneity, positive definiteness,
  // Randers |b|_a < 1). Throws on failure.
  void validate(const Vec& probe_lo, const Vec& probe_hi, int probes, unsigned seed) const;

  double zero_tolerance(double scale) const { return 1e-12 * std::max(1.0, scale); }

 private:
  void require_nonzero(const Vec& v) const;

  int n_ = 0;
  MetricKind kind_ = MetricKind::Euclidean;
  bool reversed_ = false;
  bool position_independent_ = true;
  std::vector<Expr> coeff_g_, coeff_a_, coeff_b_;
  Expr norm2_;
};

}  // namespace finfocal
