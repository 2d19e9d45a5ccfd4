#include "finfocal/metric.hpp"

#include <cmath>
#include <random>

#include <Eigen/Cholesky>

namespace finfocal {

namespace {

SVec<double> to_svec(const Vec& x) {
  SVec<double> s(static_cast<int>(x.size()));
  for (int i = 0; i < s.n; ++i) s[i] = x[i];
  return s;
}

}  // namespace

MetricModel MetricModel::euclidean(int n) {
  MetricModel m;
  m.n_ = n;
  m.kind_ = MetricKind::Euclidean;
  m.position_independent_ = true;
  return m;
}

MetricModel MetricModel::ambient_euclidean(int n) {
  MetricModel m = euclidean(n);
  m.kind_ = MetricKind::AmbientEuclidean;
  return m;
}

MetricModel MetricModel::riemannian(int n, std::vector<Expr> g_entries) {
  if (static_cast<int>(g_entries.size()) != n * n)
    throw ConfigError("riemannian metric needs n*n coefficient entries");
  MetricModel m;
  m.n_ = n;
  m.kind_ = MetricKind::Riemannian;
  m.coeff_g_ = std::move(g_entries);
  m.position_independent_ = true;
  for (const Expr& e : m.coeff_g_) {
    if (e.depends_on_y()) throw ConfigError("metric coefficients may not depend on y");
    if (e.depends_on_x()) m.position_independent_ = false;
  }
  return m;
}

MetricModel MetricModel::randers(int n, std::vector<Expr> a_entries,
                                 std::vector<Expr> b_entries) {
  if (static_cast<int>(a_entries.size()) != n * n ||
      static_cast<int>(b_entries.size()) != n)
    throw ConfigError("randers metric needs n*n 'a' entries and n 'b' entries");
  MetricModel m;
  m.n_ = n;
  m.kind_ = MetricKind::Randers;
  m.coeff_a_ = std::move(a_entries);
  m.coeff_b_ = std::move(b_entries);
  m.position_independent_ = true;
  for (const Expr& e : m.coeff_a_) {
    if (e.depends_on_y()) throw ConfigError("metric coefficients may not depend on y");
    if (e.depends_on_x()) m.position_independent_ = false;
  }
  for (const Expr& e : m.coeff_b_) {
    if (e.depends_on_y()) throw ConfigError("metric coefficients may not depend on y");
    if (e.depends_on_x()) m.position_independent_ = false;
  }
  return m;
}

MetricModel MetricModel::minkowski(int n, Expr f_squared) {
  if (f_squared.depends_on_x())
    throw ConfigError("minkowski norm may not depend on position");
  MetricModel m;
  m.n_ = n;
  m.kind_ = MetricKind::Minkowski;
  m.norm2_ = std::move(f_squared);
  m.position_independent_ = true;
  return m;
}

MetricModel MetricModel::reverse() const {
  MetricModel m = *this;
  if (is_quadratic()) return m;  // quadratic norms are reversible
  m.reversed_ = !m.reversed_;
  return m;
}

void MetricModel::require_nonzero(const Vec& v) const {
  if (v.norm() < zero_tolerance(v.norm() + 1.0))
    throw ZeroVector("metric evaluated at (numerically) zero vector");
}

double MetricModel::finsler(const Vec& x, const Vec& v) const {
  require_nonzero(v);
  double L = energy(to_svec(x), to_svec(v));
  if (!(L > 0.0)) throw NotPositiveDefinite("F^2 <= 0 at a nonzero vector");
  return std::sqrt(L);
}

Mat MetricModel::fundamental_tensor_matrix(const Vec& x, const Vec& v) const {
  require_nonzero(v);
  SMat<double> g = g_tensor(to_svec(x), to_svec(v));
  Mat G(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) G(i, j) = g(i, j);
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("fundamental tensor not positive definite");
  return G;
}

SymmetricBilinear MetricModel::fundamental_tensor(const Point& p, const Vector& v) const {
  return {fundamental_tensor_matrix(p.coords, v.components)};
}

double MetricModel::cartan(const Vec& xbase, const Vec& v, const Vec& a, const Vec& b,
                           const Vec& c) const {
  require_nonzero(v);
  using D1 = Dual<double>;
  using D2 = Dual<D1>;
  using D3 = Dual<D2>;
  const int n = n_;
  SVec<D3> X(n), Y(n);
  for (int i = 0; i < n; ++i) {
    X[i] = D3(xbase[i]);
    Y[i] = D3(v[i]);
    Y[i].b.a.a += a[i];    // epsilon_1 direction a
    Y[i].a.b.a += b[i];    // epsilon_2 direction b
    Y[i].a.a.b += c[i];    // epsilon_3 direction c
  }
  D3 L = energy(X, Y);
  return 0.25 * L.b.b.b;
}

double MetricModel::cartan_tensor(const Point& p, const Vector& v, const Vector& x,
                                  const Vector& y, const Vector& z) const {
  return cartan(p.coords, v.components, x.components, y.components, z.components);
}

Vec MetricModel::legendre_components(const Vec& x, const Vec& v) const {
  require_nonzero(v);
  // L(v)(w) = g_v(v, w) = 1/2 dL_v(w) by Euler homogeneity
  using D1 = Dual<double>;
  const int n = n_;
  Vec xi(n);
  SVec<D1> X = lift_vec<D1>(to_svec(x));
  for (int j = 0; j < n; ++j) {
    SVec<D1> Y = lift_vec<D1>(to_svec(v));
    Y[j].b = 1.0;
    xi[j] = 0.5 * energy(X, Y).b;
  }
  return xi;
}

Vec MetricModel::legendre_inverse_components(const Vec& x, const Vec& xi) const {
  if (xi.norm() < zero_tolerance(xi.norm() + 1.0))
    throw ZeroVector("legendre_inverse at zero covector");
  Vec u = xi;  // Euclidean sharp as the initial guess
  double target = 1e-10 * xi.norm();
  double res = (legendre_components(x, u) - xi).norm();
  for (int it = 0; it < 60; ++it) {
    if (res <= target) return u;
    Vec r = xi - legendre_components(x, u);
    Mat g = fundamental_tensor_matrix(x, u);  // Jacobian of the Legendre map
    Vec step = g.ldlt().solve(r);
    double lambda = 1.0;
    for (int half = 0; half < 30; ++half) {
      Vec trial = u + lambda * step;
      if (trial.norm() > zero_tolerance(1.0)) {
        double tri;
        try {
          tri = (legendre_components(x, trial) - xi).norm();
        } catch (const NumericError&) {
          tri = res + 1.0;
        }
        if (tri < res) {
          u = trial;
          res = tri;
          break;
        }
      }
      lambda *= 0.5;
      if (half == 29) throw NewtonDivergence("legendre_inverse stalled");
    }
  }
  if (res <= target) return u;
  throw NewtonDivergence("legendre_inverse did not reach tolerance");
}

Covector MetricModel::legendre(const Point& p, const Vector& v) const {
  return {p, legendre_components(p.coords, v.components)};
}

Vector MetricModel::legendre_inverse(const Point& p, const Covector& xi) const {
  return {p, legendre_inverse_components(p.coords, xi.components)};
}

void MetricModel::validate(const Vec& probe_lo, const Vec& probe_hi, int probes,
                           unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int n = n_;
  for (int k = 0; k < probes; ++k) {
    Vec x(n), v(n);
    for (int i = 0; i < n; ++i) {
      double t = 0.5 * (unit(rng) + 1.0);
      x[i] = probe_lo[i] + t * (probe_hi[i] - probe_lo[i]);
      v[i] = unit(rng);
    }
    if (v.norm() < 1e-3) v[0] += 1.0;
    double f = finsler(x, v);
    for (double lambda : {0.1, 2.0, 17.0}) {
      double fl = finsler(x, Vec(lambda * v));
      if (std::abs(fl - lambda * f) > 1e-10 * std::max(1.0, lambda * f))
        throw ConfigError("metric is not positively 1-homogeneous");
    }
    fundamental_tensor_matrix(x, v);  // throws if not positive definite
    if (kind_ == MetricKind::Randers) {
      // |b|_a < 1 is the Minkowski-norm condition for Randers data
      SVec<double> sx = to_svec(x), sy(n);
      Mat A(n, n);
      Vec b(n);
      for (int i = 0; i < n; ++i) {
        b[i] = coeff_b_[static_cast<size_t>(i)].eval(sx, sy);
        for (int j = 0; j < n; ++j)
          A(i, j) = coeff_a_[static_cast<size_t>(i * n + j)].eval(sx, sy);
      }
      double bn = std::sqrt(b.dot(A.ldlt().solve(b)));
      if (!(bn < 1.0))
        throw NotPositiveDefinite("randers drift |b|_a >= 1 at a probe point");
    }
  }
}

}  // namespace finfocal
