#pragma once

#include <map>
#include <memory>
#include <optional>

#include "finfocal/metric.hpp"
#include "finfocal/ode.hpp"

namespace finfocal {

// ---------------------------------------------------------------------------
// Level surfaces for the embedded backend: f(x) = 0 in R^{n+1} with the
// induced Euclidean metric. f is generic over duals so the constrained
// geodesic flow and its exact linearization come from the same definition.
// ---------------------------------------------------------------------------

class LevelSurface {
 public:
  // f as an expression in x0..x{d-1}; d = ambient dimension = manifold dim + 1
  LevelSurface(int ambient_dim, Expr level);
  static LevelSurface sphere(int ambient_dim, double radius);

  int ambient_dim() const { return d_; }

  template <class T>
  T level(const SVec<T>& x) const {
    SVec<T> dummy;
    return level_.eval(x, dummy);
  }

  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  double residual(const Vec& x) const;
  Vec unit_normal(const Vec& x) const;
  // d/dt of the unit normal along velocity v
  Vec normal_rate(const Vec& x, const Vec& v) const;
  // project a point back onto the level set (one damped Newton sweep)
  Vec project_point(const Vec& x) const;
  Vec project_tangent(const Vec& x, const Vec& w) const;

  template <class T>
  SVec<T> accel(const SVec<T>& x, const SVec<T>& v) const {
    // gamma'' = -(v^T H v / |grad f|^2) grad f  keeps the flow on f = const
    using D1 = Dual<T>;
    using D2 = Dual<D1>;
    const int d = d_;
    SVec<T> grad(d);
    {
      for (int i = 0; i < d; ++i) {
        SVec<D1> X = lift_vec_t<D1>(x);
        X[i].b = T(1.0);
        grad[i] = level(X).b;
      }
    }
    // v^T H v via one second directional derivative
    T vHv;
    {
      SVec<D2> X = lift_vec_t<D2>(x);
      for (int i = 0; i < d; ++i) {
        X[i].b.a += v[i];
        X[i].a.b += v[i];
      }
      vHv = level(X).b.b;
    }
    T g2(0.0);
    for (int i = 0; i < d; ++i) g2 += grad[i] * grad[i];
    T coef = vHv / g2;
    SVec<T> a(d);
    for (int i = 0; i < d; ++i) a[i] = -1.0 * (coef * grad[i]);
    return a;
  }

 private:
  int d_;
  Expr level_;
};

// ---------------------------------------------------------------------------
// GeodesicSystem: one interface over the two backends.
//  - chart: M = open set of R^n with a Finsler MetricModel; spray and the
//    Chern connection come from nested-dual differentiation of F^2.
//  - embedded: hypersurface f = 0 in R^{n+1}, induced Euclidean metric;
//    covariant derivative = tangential projection (Gauss formula).
// All vectors are in ambient coordinates (chart: ambient == manifold).
// ---------------------------------------------------------------------------

class GeodesicSystem {
 public:
  static GeodesicSystem chart(MetricModel metric);
  static GeodesicSystem embedded(LevelSurface surface);

  bool is_embedded() const { return surface_.has_value(); }
  int ambient_dim() const { return ambient_; }
  int manifold_dim() const { return manifold_; }
  const MetricModel& metric() const { return metric_; }
  const LevelSurface& surface() const { return *surface_; }

  // coordinate acceleration a(x, v); positively 2-homogeneous in v
  Vec accel(const Vec& x, const Vec& v) const;
  // exact linearization of accel along (dx, dv)
  Vec accel_variation(const Vec& x, const Vec& v, const Vec& dx, const Vec& dv) const;
  // parallel transport: de/dt for D^v_gamma e = 0
  Vec transport_rhs(const Vec& x, const Vec& v, const Vec& e) const;

  // covariant derivative of a field from coordinate data and back
  Vec cov_from_coord(const Vec& x, const Vec& v, const Vec& J, const Vec& dJdt) const;
  Vec coord_from_cov(const Vec& x, const Vec& v, const Vec& J, const Vec& Jdot) const;

  Mat metric_tensor(const Vec& x, const Vec& v) const;
  double finsler(const Vec& x, const Vec& v) const;

  // Chern connection coefficients Gamma^i_{jk}(x, y) contracted with (u, w).
  Vec gamma_bilinear(const Vec& x, const Vec& y, const Vec& u, const Vec& w) const;

  // embedded-only state cleanup after accepted steps
  void project_state(Vec& x, Vec& v) const;
  double level_residual(const Vec& x) const;

 private:
  GeodesicSystem() = default;
  void chern_gamma(const Vec& x, const Vec& y, double* gamma) const;  // n^3 row-major

  int ambient_ = 0, manifold_ = 0;
  MetricModel metric_;
  std::optional<LevelSurface> surface_;
};

// ---------------------------------------------------------------------------
// Geodesic paths with dense output
// ---------------------------------------------------------------------------

struct GeodesicPath {
  const GeodesicSystem* sys = nullptr;
  Vector initial;
  double t_begin = 0.0, t_end = 0.0;
  DensePath dense;
  double max_speed_drift = 0.0;     // relative F drift per unit time
  double max_level_residual = 0.0;  // embedded backend only

  Vec position(double t) const;
  Vec velocity(double t) const;
};

Vec spray_acceleration(const GeodesicSystem& sys, const Point& p, const Vector& v);

GeodesicPath integrate_geodesic(const GeodesicSystem& sys, const Point& p,
                                const Vector& v, double T, double tol = 1e-10,
                                double hmax = 0.0);

// exp(t v) with memoization on exact (v, t) keys
class ExponentialMap {
 public:
  explicit ExponentialMap(const GeodesicSystem& sys) : sys_(&sys) {}
  Point at(const Vector& v, double t, double tol = 1e-10);
  size_t cache_size() const { return cache_.size(); }

 private:
  const GeodesicSystem* sys_;
  std::map<std::vector<double>, Point> cache_;
};

// D^{\dot gamma}_gamma X for a sampled field X(t_i) on a uniform grid.
std::vector<Vec> covariant_derivative_along(const GeodesicPath& path,
                                            const std::vector<double>& times,
                                            const std::vector<Vec>& samples);

}  // namespace finfocal
