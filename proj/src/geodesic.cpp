#include "finfocal/geodesic.hpp"

#include <cmath>

namespace finfocal {

namespace {

SVec<double> to_svec(const Vec& x) {
  SVec<double> s(static_cast<int>(x.size()));
  for (int i = 0; i < s.n; ++i) s[i] = x[i];
  return s;
}

Vec to_eigen(const SVec<double>& s) {
  Vec x(s.n);
  for (int i = 0; i < s.n; ++i) x[i] = s[i];
  return x;
}

using D1 = Dual<double>;

// Coordinate spray acceleration of a chart Finsler metric:
//   2 g_{lk} a^k = L_{x^l} - L_{y^l x^m} y^m,  a = -2 G.
template <class T>
SVec<T> chart_accel(const MetricModel& m, const SVec<T>& x, const SVec<T>& y) {
  using DT = Dual<T>;
  using DDT = Dual<DT>;
  const int n = m.dim();
  SVec<T> rhs(n);
  for (int l = 0; l < n; ++l) {
    SVec<DT> X = lift_vec_t<DT>(x);
    SVec<DT> Y = lift_vec_t<DT>(y);
    X[l].b = T(1.0);
    rhs[l] = m.energy(X, Y).b;  // L_{x^l}
  }
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      SVec<DDT> X = lift_vec_t<DDT>(x);
      SVec<DDT> Y = lift_vec_t<DDT>(y);
      Y[l].b.a = T(1.0);
      X[k].a.b = T(1.0);
      T Lyx = m.energy(X, Y).b.b;
      rhs[l] -= Lyx * y[k];
    }
  }
  SMat<T> g2 = m.g_tensor(x, y);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g2(i, j) = 2.0 * g2(i, j);
  return solve_small(g2, rhs);
}

}  // namespace

// ---------------------------------------------------------------------------
// LevelSurface
// ---------------------------------------------------------------------------

LevelSurface::LevelSurface(int ambient_dim, Expr level)
    : d_(ambient_dim), level_(std::move(level)) {
  if (level_.depends_on_y()) throw ConfigError("level function may not depend on y");
}

LevelSurface LevelSurface::sphere(int ambient_dim, double radius) {
  std::string e;
  for (int i = 0; i < ambient_dim; ++i) {
    if (i) e += " + ";
    e += "x" + std::to_string(i) + "^2";
  }
  e += " - " + format_g17(radius * radius);
  return LevelSurface(ambient_dim, Expr::parse(e));
}

Vec LevelSurface::gradient(const Vec& x) const {
  Vec g(d_);
  for (int i = 0; i < d_; ++i) {
    SVec<D1> X = lift_vec<D1>(to_svec(x));
    X[i].b = 1.0;
    SVec<D1> dummy;
    g[i] = level_.eval(X, dummy).b;
  }
  return g;
}

Mat LevelSurface::hessian(const Vec& x) const {
  using D2 = Dual<D1>;
  Mat H(d_, d_);
  for (int i = 0; i < d_; ++i) {
    for (int j = i; j < d_; ++j) {
      SVec<D2> X = lift_vec<D2>(to_svec(x));
      X[i].b.a = 1.0;
      X[j].a.b = 1.0;
      SVec<D2> dummy;
      H(i, j) = level_.eval(X, dummy).b.b;
      H(j, i) = H(i, j);
    }
  }
  return H;
}

double LevelSurface::residual(const Vec& x) const {
  SVec<double> dummy;
  return std::abs(level_.eval(to_svec(x), dummy));
}

Vec LevelSurface::unit_normal(const Vec& x) const {
  Vec g = gradient(x);
  double n = g.norm();
  if (n < 1e-14) throw DegenerateTangent("level gradient vanishes");
  return g / n;
}

Vec LevelSurface::normal_rate(const Vec& x, const Vec& v) const {
  Vec g = gradient(x);
  double gn = g.norm();
  Vec nh = g / gn;
  Vec Hv = hessian(x) * v;
  return (Hv - nh * nh.dot(Hv)) / gn;
}

Vec LevelSurface::project_point(const Vec& x) const {
  Vec p = x;
  for (int it = 0; it < 5; ++it) {
    SVec<double> dummy;
    double f = level_.eval(to_svec(p), dummy);
    if (std::abs(f) < 1e-14) break;
    Vec g = gradient(p);
    p -= (f / g.squaredNorm()) * g;
  }
  return p;
}

Vec LevelSurface::project_tangent(const Vec& x, const Vec& w) const {
  Vec nh = unit_normal(x);
  return w - nh * nh.dot(w);
}

// ---------------------------------------------------------------------------
// GeodesicSystem
// ---------------------------------------------------------------------------

GeodesicSystem GeodesicSystem::chart(MetricModel metric) {
  GeodesicSystem s;
  s.ambient_ = metric.dim();
  s.manifold_ = metric.dim();
  s.metric_ = std::move(metric);
  return s;
}

GeodesicSystem GeodesicSystem::embedded(LevelSurface surface) {
  GeodesicSystem s;
  s.ambient_ = surface.ambient_dim();
  s.manifold_ = surface.ambient_dim() - 1;
  s.metric_ = MetricModel::ambient_euclidean(surface.ambient_dim());
  s.surface_ = std::move(surface);
  return s;
}

Vec GeodesicSystem::accel(const Vec& x, const Vec& v) const {
  if (surface_) return to_eigen(surface_->accel(to_svec(x), to_svec(v)));
  if (metric_.position_independent()) return Vec::Zero(ambient_);
  return to_eigen(chart_accel(metric_, to_svec(x), to_svec(v)));
}

Vec GeodesicSystem::accel_variation(const Vec& x, const Vec& v, const Vec& dx,
                                    const Vec& dv) const {
  const int d = ambient_;
  SVec<D1> X(d), V(d);
  for (int i = 0; i < d; ++i) {
    X[i] = D1(x[i], dx[i]);
    V[i] = D1(v[i], dv[i]);
  }
  SVec<D1> a;
  if (surface_) {
    a = surface_->accel(X, V);
  } else if (metric_.position_independent()) {
    return Vec::Zero(d);
  } else {
    a = chart_accel(metric_, X, V);
  }
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = a[i].b;
  return out;
}

void GeodesicSystem::chern_gamma(const Vec& x, const Vec& y, double* gamma) const {
  const int n = ambient_;
  if (metric_.position_independent()) {
    std::fill(gamma, gamma + n * n * n, 0.0);
    return;
  }
  SVec<double> sx = to_svec(x), sy = to_svec(y);
  // nonlinear connection N^i_j = dG^i/dy^j, G = -a/2
  Mat N(n, n);
  for (int j = 0; j < n; ++j) {
    SVec<D1> X = lift_vec<D1>(sx), Y = lift_vec<D1>(sy);
    Y[j].b = 1.0;
    SVec<D1> a = chart_accel(metric_, X, Y);
    for (int i = 0; i < n; ++i) N(i, j) = -0.5 * a[i].b;
  }
  // dg/dx_k and dg/dy_m
  std::vector<Mat> dgdx(static_cast<size_t>(n)), dgdy(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    SVec<D1> X = lift_vec<D1>(sx), Y = lift_vec<D1>(sy);
    X[k].b = 1.0;
    SMat<D1> g = metric_.g_tensor(X, Y);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = g(i, j).b;
    dgdx[static_cast<size_t>(k)] = G;
  }
  for (int m = 0; m < n; ++m) {
    SVec<D1> X = lift_vec<D1>(sx), Y = lift_vec<D1>(sy);
    Y[m].b = 1.0;
    SMat<D1> g = metric_.g_tensor(X, Y);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = g(i, j).b;
    dgdy[static_cast<size_t>(m)] = G;
  }
  // horizontal derivatives delta_k g_ij, then the Christoffel-type formula
  auto delta = [&](int k, int i, int j) {
    double s = dgdx[static_cast<size_t>(k)](i, j);
    for (int m = 0; m < n; ++m) s -= N(m, k) * dgdy[static_cast<size_t>(m)](i, j);
    return s;
  };
  Mat ginv = metric_.fundamental_tensor_matrix(x, y).inverse();
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          s += ginv(l, i) * (delta(k, i, j) + delta(j, i, k) - delta(i, j, k));
        gamma[(l * n + j) * n + k] = 0.5 * s;
      }
}

Vec GeodesicSystem::gamma_bilinear(const Vec& x, const Vec& y, const Vec& u,
                                   const Vec& w) const {
  const int n = ambient_;
  if (surface_ || metric_.position_independent()) return Vec::Zero(n);
  std::vector<double> gamma(static_cast<size_t>(n * n * n));
  chern_gamma(x, y, gamma.data());
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += gamma[static_cast<size_t>((l * n + j) * n + k)] * u[j] * w[k];
    out[l] = s;
  }
  return out;
}

Vec GeodesicSystem::transport_rhs(const Vec& x, const Vec& v, const Vec& e) const {
  if (surface_) {
    // de/dt = -<e, dn/dt> n keeps e tangent with zero covariant derivative
    Vec nh = surface_->unit_normal(x);
    Vec nr = surface_->normal_rate(x, v);
    return -e.dot(nr) * nh;
  }
  return -gamma_bilinear(x, v, e, v);
}

Vec GeodesicSystem::cov_from_coord(const Vec& x, const Vec& v, const Vec& J,
                                   const Vec& dJdt) const {
  if (surface_) {
    Vec nh = surface_->unit_normal(x);
    return dJdt - nh * nh.dot(dJdt);
  }
  return dJdt + gamma_bilinear(x, v, J, v);
}

Vec GeodesicSystem::coord_from_cov(const Vec& x, const Vec& v, const Vec& J,
                                   const Vec& Jdot) const {
  if (surface_) {
    // the normal component of dJ/dt is forced by tangency of the variation
    Vec nh = surface_->unit_normal(x);
    Vec nr = surface_->normal_rate(x, v);
    return Jdot - nh * J.dot(nr);
  }
  return Jdot - gamma_bilinear(x, v, J, v);
}

Mat GeodesicSystem::metric_tensor(const Vec& x, const Vec& v) const {
  if (surface_ || metric_.kind() == MetricKind::Euclidean ||
      metric_.kind() == MetricKind::AmbientEuclidean)
    return Mat::Identity(ambient_, ambient_);
  return metric_.fundamental_tensor_matrix(x, v);
}

double GeodesicSystem::finsler(const Vec& x, const Vec& v) const {
  return metric_.finsler(x, v);
}

void GeodesicSystem::project_state(Vec& x, Vec& v) const {
  if (!surface_) return;
  x = surface_->project_point(x);
  v = surface_->project_tangent(x, v);
}

double GeodesicSystem::level_residual(const Vec& x) const {
  return surface_ ? surface_->residual(x) : 0.0;
}

// ---------------------------------------------------------------------------
// Geodesic paths
// ---------------------------------------------------------------------------

Vec spray_acceleration(const GeodesicSystem& sys, const Point& p, const Vector& v) {
  if (v.components.norm() < 1e-12) throw ZeroVector("spray at zero vector");
  return sys.accel(p.coords, v.components);
}

Vec GeodesicPath::position(double t) const {
  Vec y = dense.eval(t);
  return y.head(sys->ambient_dim());
}

Vec GeodesicPath::velocity(double t) const {
  Vec y = dense.eval(t);
  return y.segment(sys->ambient_dim(), sys->ambient_dim());
}

GeodesicPath integrate_geodesic(const GeodesicSystem& sys, const Point& p,
                                const Vector& v, double T, double tol, double hmax) {
  const int d = sys.ambient_dim();
  if (v.components.norm() < 1e-12) throw ZeroVector("geodesic with zero velocity");
  if (!(T > 0.0)) throw NumericError("geodesic horizon must be positive");

  Vec y0(2 * d);
  y0.head(d) = p.coords;
  y0.tail(d) = v.components;

  OdeOptions opts;
  opts.rtol = tol;
  opts.atol = tol;
  if (hmax > 0.0) opts.hmax = hmax;

  GeodesicPath path;
  path.sys = &sys;
  path.initial = v;
  path.initial.base = p;
  path.t_begin = 0.0;
  path.t_end = T;

  const double f0 = sys.finsler(p.coords, v.components);
  double max_drift = 0.0, max_res = 0.0;

  OdeRhs rhs = [&sys, d](double, const Vec& y, Vec& dydt) {
    dydt.resize(2 * d);
    Vec x = y.head(d), vel = y.segment(d, d);
    dydt.head(d) = vel;
    dydt.tail(d) = sys.accel(x, vel);
  };
  StepHook hook = [&](double t, Vec& y) {
    Vec x = y.head(d), vel = y.tail(d);
    if (sys.is_embedded()) {
      max_res = std::max(max_res, sys.level_residual(x));
      sys.project_state(x, vel);
      y.head(d) = x;
      y.tail(d) = vel;
      if (max_res > 1e-8) throw ConstraintDrift("embedded trajectory left the level set");
    }
    double f = sys.finsler(x, vel);
    double drift = std::abs(f - f0) / (f0 * std::max(1.0, t));
    max_drift = std::max(max_drift, drift);
    return true;
  };

  path.dense = Dopri5::integrate(rhs, y0, 0.0, T, opts, hook);
  path.max_speed_drift = max_drift;
  path.max_level_residual = max_res;
  return path;
}

Point ExponentialMap::at(const Vector& v, double t, double tol) {
  std::vector<double> key;
  key.reserve(static_cast<size_t>(2 * v.components.size() + 1));
  for (int i = 0; i < v.base.coords.size(); ++i) key.push_back(v.base.coords[i]);
  for (int i = 0; i < v.components.size(); ++i) key.push_back(v.components[i]);
  key.push_back(t);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  Point out;
  if (t == 0.0) {
    out = v.base;
  } else {
    GeodesicPath path = integrate_geodesic(*sys_, v.base, v, t, tol);
    out.coords = path.position(t);
  }
  cache_.emplace(std::move(key), out);
  return out;
}

std::vector<Vec> covariant_derivative_along(const GeodesicPath& path,
                                            const std::vector<double>& times,
                                            const std::vector<Vec>& samples) {
  if (times.size() != samples.size() || times.size() < 5)
    throw InsufficientSamples("need at least 5 uniformly spaced samples");
  const size_t m = times.size();
  const double dt = times[1] - times[0];
  for (size_t i = 1; i + 1 < m; ++i)
    if (std::abs((times[i + 1] - times[i]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw InsufficientSamples("sample grid must be uniform");

  std::vector<Vec> out(m);
  const GeodesicSystem& sys = *path.sys;
  for (size_t i = 0; i < m; ++i) {
    Vec dXdt;
    if (i >= 2 && i + 2 < m) {
      dXdt = (-samples[i + 2] + 8.0 * samples[i + 1] - 8.0 * samples[i - 1] +
              samples[i - 2]) /
             (12.0 * dt);
    } else if (i == 0) {
      dXdt = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * dt);
    } else if (i == m - 1) {
      dXdt = (3.0 * samples[m - 1] - 4.0 * samples[m - 2] + samples[m - 3]) / (2.0 * dt);
    } else {
      dXdt = (samples[i + 1] - samples[i - 1]) / (2.0 * dt);
    }
    Vec x = path.position(times[i]);
    Vec v = path.velocity(times[i]);
    out[i] = sys.cov_from_coord(x, v, samples[i], dXdt);
  }
  return out;
}

}  // namespace finfocal
