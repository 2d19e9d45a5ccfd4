#include "finfocal/jacobi.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace finfocal {

namespace {

// g_v-orthonormal frame at the ray start: radial v first, then T_pN, then the
// fiber complement. Deterministic, shared by the basis and the transport.
Mat initial_frame(const NormalBundle& bundle, const UnitNormal& v) {
  const GeodesicSystem& sys = bundle.system();
  const Submanifold& sub = bundle.submanifold();
  const int d = sys.ambient_dim();
  const int n = sys.manifold_dim();
  const int m = sub.param_dim();

  Mat G = sys.metric_tensor(v.p, v.v);
  auto gdot = [&](const Vec& a, const Vec& b) { return a.dot(G * b); };

  Mat E(d, n);
  int col = 0;
  E.col(col++) = v.v / std::sqrt(gdot(v.v, v.v));
  Mat tau = sub.tangent_basis(v.params);
  for (int a = 0; a < m; ++a) {
    Vec w = tau.col(a);
    for (int c = 0; c < col; ++c) w -= E.col(c) * gdot(E.col(c), w);
    double nn = std::sqrt(gdot(w, w));
    if (nn < 1e-10) throw DegenerateTangent("tangent basis collapsed under g_v");
    E.col(col++) = w / nn;
  }
  for (int i = 0; i < d && col < n; ++i) {
    Vec w = Vec::Unit(d, i);
    if (sys.is_embedded()) w = sys.surface().project_tangent(v.p, w);
    for (int c = 0; c < col; ++c) w -= E.col(c) * gdot(E.col(c), w);
    double nn = std::sqrt(gdot(w, w));
    if (nn > 1e-6) E.col(col++) = w / nn;
  }
  if (col != n) throw DegenerateTangent("could not complete a g-orthonormal frame");
  return E;
}

}  // namespace

// ---------------------------------------------------------------------------
// basis
// ---------------------------------------------------------------------------

JacobiBasis n_jacobi_basis(const NormalBundle& bundle, const UnitNormal& v) {
  const GeodesicSystem& sys = bundle.system();
  const Submanifold& sub = bundle.submanifold();
  const int d = sys.ambient_dim();
  const int n = sys.manifold_dim();
  const int m = sub.param_dim();
  Mat E = initial_frame(bundle, v);

  JacobiBasis basis;
  basis.tangent_count = m;
  basis.radial_index = 0;
  basis.pairs.resize(static_cast<size_t>(n));
  basis.pairs[0] = JacobiPair{Vec::Zero(d), v.v};  // radial: J = t gamma_dot
  for (int a = 0; a < m; ++a) {
    Vec e = E.col(1 + a);
    basis.pairs[static_cast<size_t>(1 + a)] =
        JacobiPair{e, bundle.shape_apply(v.params, v.v, e)};
  }
  for (int b = m + 1; b < n; ++b)
    basis.pairs[static_cast<size_t>(b)] = JacobiPair{Vec::Zero(d), E.col(b)};
  return basis;
}

// ---------------------------------------------------------------------------
// RayFrame
// ---------------------------------------------------------------------------

namespace {

struct PackLayout {
  int d = 0, n = 0;
  int total() const { return 2 * d + n * d + 4 * n * d; }
  int x() const { return 0; }
  int v() const { return d; }
  int e(int j) const { return 2 * d + j * d; }
  int dx(int j) const { return 2 * d + n * d + j * 2 * d; }
  int dv(int j) const { return dx(j) + d; }
};

}  // namespace

RayFrame::RayFrame(const NormalBundle& bundle, const UnitNormal& direction,
                   double horizon, double tol, double hmax)
    : bundle_(&bundle), sys_(&bundle.system()), dir_(direction), T_(horizon) {
  n_ = sys_->manifold_dim();
  d_ = sys_->ambient_dim();
  basis_ = n_jacobi_basis(bundle, dir_);
  E0_ = initial_frame(bundle, dir_);
  Mat G = sys_->metric_tensor(dir_.p, dir_.v);

  // initial data of the N-Jacobi basis in frame coordinates
  A0_ = Mat::Zero(n_, n_);
  B0_ = Mat::Zero(n_, n_);
  for (int j = 0; j < n_; ++j) {
    const JacobiPair& pr = basis_.pairs[static_cast<size_t>(j)];
    A0_.col(j) = E0_.transpose() * G * pr.J0;
    B0_.col(j) = E0_.transpose() * G * pr.Jdot0;
  }

  PackLayout L{d_, n_};
  Vec y0 = Vec::Zero(L.total());
  y0.segment(L.x(), d_) = dir_.p;
  y0.segment(L.v(), d_) = dir_.v;
  for (int j = 0; j < n_; ++j) y0.segment(L.e(j), d_) = E0_.col(j);
  // fundamental system: P block (dX = e_j, Jdot = 0), Q block (dX = 0, Jdot = e_j)
  for (int j = 0; j < n_; ++j) {
    Vec J0 = E0_.col(j);
    y0.segment(L.dx(j), d_) = J0;
    y0.segment(L.dv(j), d_) = sys_->coord_from_cov(dir_.p, dir_.v, J0, Vec::Zero(d_));
  }
  for (int j = 0; j < n_; ++j) {
    Vec Jdot0 = E0_.col(j);
    y0.segment(L.dx(n_ + j), d_).setZero();
    y0.segment(L.dv(n_ + j), d_) =
        sys_->coord_from_cov(dir_.p, dir_.v, Vec::Zero(d_), Jdot0);
  }

  OdeOptions opts;
  opts.rtol = tol;
  opts.atol = tol;
  opts.hmax = (hmax > 0.0) ? hmax : horizon / 128.0;

  const GeodesicSystem& sys = *sys_;
  const double f0 = sys.finsler(dir_.p, dir_.v);
  double max_drift = 0.0;

  OdeRhs rhs = [&sys, L](double, const Vec& y, Vec& dydt) {
    dydt.resize(L.total());
    Vec x = y.segment(L.x(), L.d), v = y.segment(L.v(), L.d);
    dydt.segment(L.x(), L.d) = v;
    dydt.segment(L.v(), L.d) = sys.accel(x, v);
    for (int j = 0; j < L.n; ++j)
      dydt.segment(L.e(j), L.d) = sys.transport_rhs(x, v, y.segment(L.e(j), L.d));
    for (int j = 0; j < 2 * L.n; ++j) {
      Vec dx = y.segment(L.dx(j), L.d), dv = y.segment(L.dv(j), L.d);
      dydt.segment(L.dx(j), L.d) = dv;
      dydt.segment(L.dv(j), L.d) = sys.accel_variation(x, v, dx, dv);
    }
  };
  StepHook hook = [&sys, &max_drift, f0, L](double t, Vec& y) {
    Vec x = y.segment(L.x(), L.d), v = y.segment(L.v(), L.d);
    if (sys.is_embedded()) {
      const LevelSurface& surf = sys.surface();
      if (surf.residual(x) > 1e-8)
        throw ConstraintDrift("frame trajectory left the level set");
      sys.project_state(x, v);
      y.segment(L.x(), L.d) = x;
      y.segment(L.v(), L.d) = v;
      for (int j = 0; j < L.n; ++j)
        y.segment(L.e(j), L.d) = surf.project_tangent(x, y.segment(L.e(j), L.d));
      Mat H = surf.hessian(x);
      Vec nh = surf.unit_normal(x);
      double gn = surf.gradient(x).norm();
      for (int j = 0; j < 2 * L.n; ++j) {
        Vec dx = y.segment(L.dx(j), L.d);
        dx = surf.project_tangent(x, dx);
        Vec dv = y.segment(L.dv(j), L.d);
        double want = -v.dot(H * dx) / gn;  // tangency of the varied velocity
        dv += (want - nh.dot(dv)) * nh;
        y.segment(L.dx(j), L.d) = dx;
        y.segment(L.dv(j), L.d) = dv;
      }
    }
    double f = sys.finsler(x, v);
    max_drift = std::max(max_drift, std::abs(f - f0) / (f0 * std::max(1.0, t)));
    return true;
  };

  path_ = Dopri5::integrate(rhs, y0, 0.0, horizon, opts, hook);
  max_drift_ = max_drift;
}

void RayFrame::unpack(const Vec& y, FrameState& st) const {
  PackLayout L{d_, n_};
  st.x = y.segment(L.x(), d_);
  st.v = y.segment(L.v(), d_);
  st.E.resize(d_, n_);
  for (int j = 0; j < n_; ++j) st.E.col(j) = y.segment(L.e(j), d_);
  st.dX.resize(d_, 2 * n_);
  st.dV.resize(d_, 2 * n_);
  for (int j = 0; j < 2 * n_; ++j) {
    st.dX.col(j) = y.segment(L.dx(j), d_);
    st.dV.col(j) = y.segment(L.dv(j), d_);
  }
}

FrameState RayFrame::state(double t) const {
  FrameState st;
  unpack(path_.eval(t), st);
  return st;
}

Vec RayFrame::position(double t) const {
  PackLayout L{d_, n_};
  return path_.eval(t).segment(L.x(), d_);
}

Vec RayFrame::velocity(double t) const {
  PackLayout L{d_, n_};
  return path_.eval(t).segment(L.v(), d_);
}

Mat RayFrame::frame(double t) const { return state(t).E; }

void RayFrame::fundamental(double t, Mat& P, Mat& Q, Mat& Pp, Mat& Qp) const {
  FrameState st = state(t);
  Mat G = sys_->metric_tensor(st.x, st.v);
  Mat EtG = st.E.transpose() * G;
  P.resize(n_, n_);
  Q.resize(n_, n_);
  Pp.resize(n_, n_);
  Qp.resize(n_, n_);
  for (int j = 0; j < 2 * n_; ++j) {
    Vec Jdot = sys_->cov_from_coord(st.x, st.v, st.dX.col(j), st.dV.col(j));
    Vec y = EtG * st.dX.col(j);
    Vec yp = EtG * Jdot;
    if (j < n_) {
      P.col(j) = y;
      Pp.col(j) = yp;
    } else {
      Q.col(j - n_) = y;
      Qp.col(j - n_) = yp;
    }
  }
}

Mat RayFrame::D(double t) const {
  Mat P, Q, Pp, Qp;
  fundamental(t, P, Q, Pp, Qp);
  return P * A0_ + Q * B0_;
}

Mat RayFrame::Dprime(double t) const {
  Mat P, Q, Pp, Qp;
  fundamental(t, P, Q, Pp, Qp);
  return Pp * A0_ + Qp * B0_;
}

double RayFrame::detD(double t) const { return D(t).determinant(); }

Vec RayFrame::J_frame(const Vec& c, double t) const { return D(t) * c; }
Vec RayFrame::Jdot_frame(const Vec& c, double t) const { return Dprime(t) * c; }

Vec RayFrame::J_at(const Vec& c, double t) const {
  FrameState st = state(t);
  Vec a0c = A0_ * c, b0c = B0_ * c;
  Vec out = Vec::Zero(d_);
  for (int j = 0; j < n_; ++j)
    out += st.dX.col(j) * a0c[j] + st.dX.col(n_ + j) * b0c[j];
  return out;
}

Vec RayFrame::Jdot_at(const Vec& c, double t) const {
  FrameState st = state(t);
  Vec a0c = A0_ * c, b0c = B0_ * c;
  Vec dx = Vec::Zero(d_), dv = Vec::Zero(d_);
  for (int j = 0; j < n_; ++j) {
    dx += st.dX.col(j) * a0c[j] + st.dX.col(n_ + j) * b0c[j];
    dv += st.dV.col(j) * a0c[j] + st.dV.col(n_ + j) * b0c[j];
  }
  return sys_->cov_from_coord(st.x, st.v, dx, dv);
}

std::vector<double> RayFrame::sample_times() const {
  std::vector<double> ts;
  for (const DenseStep& s : path_.steps()) {
    ts.push_back(s.t0);
    ts.push_back(s.t0 + 0.5 * s.h);
  }
  ts.push_back(T_);
  return ts;
}

double RayFrame::frame_gram_drift() const {
  double worst = 0.0;
  for (double t : {0.25 * T_, 0.5 * T_, 0.75 * T_, T_}) {
    FrameState st = state(t);
    Mat G = sys_->metric_tensor(st.x, st.v);
    Mat gram = st.E.transpose() * G * st.E;
    worst = std::max(worst, (gram - Mat::Identity(n_, n_)).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// NJacobiField
// ---------------------------------------------------------------------------

NJacobiField NJacobiField::from_pair(const RayFrame& frame, const JacobiPair& pair) {
  const GeodesicSystem& sys = frame.system();
  const UnitNormal& v = frame.direction();
  Mat G = sys.metric_tensor(v.p, v.v);
  Mat E = frame.frame(0.0);
  Vec a = E.transpose() * G * pair.J0;
  Vec b = E.transpose() * G * pair.Jdot0;
  Mat S(2 * frame.n(), frame.n());
  S.topRows(frame.n()) = frame.A0();
  S.bottomRows(frame.n()) = frame.B0();
  Vec rhs(2 * frame.n());
  rhs.head(frame.n()) = a;
  rhs.tail(frame.n()) = b;
  Vec c = S.colPivHouseholderQr().solve(rhs);
  if ((S * c - rhs).norm() > 1e-7 * std::max(1.0, rhs.norm()))
    throw PathMismatch("initial pair is not valid N-Jacobi data for this ray");
  return NJacobiField(frame, c);
}

std::vector<double> NJacobiField::zeros(double t0, double t1, double tol) const {
  // |J|^2 has strict local minima at the isolated zeros
  std::vector<double> out;
  auto norm2 = [&](double t) { return J(t).squaredNorm(); };
  const int grid = 400;
  double scale = 1e-300;
  std::vector<double> ts(static_cast<size_t>(grid + 1)), vals(static_cast<size_t>(grid + 1));
  for (int i = 0; i <= grid; ++i) {
    ts[static_cast<size_t>(i)] = t0 + (t1 - t0) * i / grid;
    vals[static_cast<size_t>(i)] = norm2(ts[static_cast<size_t>(i)]);
    scale = std::max(scale, vals[static_cast<size_t>(i)]);
  }
  for (int i = 1; i < grid; ++i) {
    if (vals[static_cast<size_t>(i)] <= vals[static_cast<size_t>(i - 1)] &&
        vals[static_cast<size_t>(i)] <= vals[static_cast<size_t>(i + 1)] &&
        vals[static_cast<size_t>(i)] < 1e-2 * scale) {
      double a = ts[static_cast<size_t>(i - 1)], b = ts[static_cast<size_t>(i + 1)];
      for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        double m1 = a + (b - a) * 0.382, m2 = a + (b - a) * 0.618;
        if (norm2(m1) < norm2(m2))
          b = m2;
        else
          a = m1;
      }
      double tz = 0.5 * (a + b);
      // a refined true zero sits at O(|J'| tol); anything larger is a dip
      if (norm2(tz) < 1e-12 * scale) out.push_back(tz);
    }
  }
  return out;
}

double adjoint_defect(const NJacobiField& J, const NJacobiField& K, double t) {
  if (&J.frame() != &K.frame())
    throw PathMismatch("adjoint defect needs fields along the same ray");
  const RayFrame& fr = J.frame();
  FrameState st = fr.state(t);
  Mat G = fr.system().metric_tensor(st.x, st.v);
  Vec j = J.J(t), jd = J.Jdot(t), k = K.J(t), kd = K.Jdot(t);
  return j.dot(G * kd) - jd.dot(G * k);
}

// ---------------------------------------------------------------------------
// exp differential and kernel charts
// ---------------------------------------------------------------------------

ExpDifferential exp_differential(const RayFrame& frame, double t, double rank_tol) {
  ExpDifferential out;
  out.t = t;
  out.D = frame.D(t);
  Eigen::JacobiSVD<Mat> svd(out.D, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const int n = frame.n();
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (out.singular_values[i] < rank_tol * out.singular_values[0]) ++k;
  out.rank = n - k;
  out.kernel = svd.matrixV().rightCols(k);
  return out;
}

Vec kernel_chart_components(const RayFrame& frame, const NormalSphereChart& chart,
                            double tstar, const Vec& kernel_coeffs, double* residual) {
  const GeodesicSystem& sys = frame.system();
  const UnitNormal& v = frame.direction();
  const int n = frame.n();

  Mat G = sys.metric_tensor(v.p, v.v);
  Mat E = frame.frame(0.0);
  Mat EtG = E.transpose() * G;

  // chart-adapted N-Jacobi fields expressed in the canonical basis
  Mat Bchart(n, n);
  double worst = 0.0;
  Mat S(2 * n, n);
  S.topRows(n) = frame.A0();
  S.bottomRows(n) = frame.B0();
  Eigen::ColPivHouseholderQR<Mat> qr(S);
  const double h = 1e-6;
  for (int j = 0; j < n - 1; ++j) {
    Vec sp = Vec::Zero(n - 1), sm = Vec::Zero(n - 1);
    sp[j] = h;
    sm[j] = -h;
    UnitNormal up = chart.at(sp), um = chart.at(sm);
    Vec dfoot = (up.p - um.p) / (2.0 * h);
    Vec dnormal = (up.v - um.v) / (2.0 * h);
    // unit-speed chart field: J(0) = dfoot, Jdot(0) = D_c u(s), reference v
    Vec Jdot0 = dnormal;
    if (sys.is_embedded()) {
      Jdot0 = sys.surface().project_tangent(v.p, Jdot0);
    } else {
      Jdot0 += sys.gamma_bilinear(v.p, v.v, v.v, dfoot);
    }
    Vec rhs(2 * n);
    rhs.head(n) = EtG * dfoot;
    rhs.tail(n) = EtG * Jdot0;
    Vec mu = qr.solve(rhs);
    worst = std::max(worst, (S * mu - rhs).norm() / std::max(1.0, rhs.norm()));
    Bchart.col(j) = mu;
  }
  // radial chart direction: varying the scale t at t* rides the canonical
  // radial solution t gamma_dot(t) scaled by 1/t*
  Bchart.col(n - 1) = (1.0 / tstar) * Vec::Unit(n, frame.basis().radial_index);
  if (residual) *residual = worst;
  return Bchart.colPivHouseholderQr().solve(kernel_coeffs);
}

SecondOrderCheck second_order_check(const RayFrame& frame, const NormalSphereChart& chart,
                                    double tstar, const Vec& kernel_coeffs, double h) {
  const GeodesicSystem& sys = frame.system();
  const int n = frame.n();

  // verify the kernel precondition |D(t*) c| small
  Mat Dm = frame.D(tstar);
  Eigen::JacobiSVD<Mat> svd(Dm, Eigen::ComputeFullU);
  double s1 = svd.singularValues()(0);
  if ((Dm * kernel_coeffs).norm() > 1e-4 * s1 * kernel_coeffs.norm())
    throw NotInKernel("combination is not in ker dE at t*");

  Vec beta = kernel_chart_components(frame, chart, tstar, kernel_coeffs);
  Vec sdir = beta.head(n - 1);
  double tdot = beta[n - 1];

  // two-parameter family (a, s) -> E((1+a)(t* + s tdot) u(s sdir))
  auto eval = [&](double a, double s) -> Vec {
    UnitNormal u = chart.at(Vec(s * sdir));
    double time = (1.0 + a) * (tstar + s * tdot);
    GeodesicPath path = integrate_geodesic(sys, Point{u.p}, Vector{Point{u.p}, u.v},
                                           std::abs(time) + 0.1, 1e-12);
    return path.position(time);
  };
  Vec mixed = (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h);

  SecondOrderCheck out;
  out.fd_value = mixed;
  out.jdot_value = tstar * frame.Jdot_at(kernel_coeffs, tstar);

  // compare modulo Im dE in frame coordinates at t*
  FrameState st = frame.state(tstar);
  Mat G = sys.metric_tensor(st.x, st.v);
  Mat EtG = st.E.transpose() * G;
  Vec diff = EtG * (out.fd_value - out.jdot_value);
  int r = 0;
  for (int i = 0; i < n; ++i)
    if (svd.singularValues()(i) >= 1e-7 * s1) ++r;
  Mat Ur = svd.matrixU().leftCols(r);
  out.defect = (diff - Ur * (Ur.transpose() * diff)).norm();
  return out;
}

}  // namespace finfocal
