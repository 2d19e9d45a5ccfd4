#include "finfocal/submanifold.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace finfocal {

namespace {

SVec<double> to_svec(const Vec& x) {
  SVec<double> s(static_cast<int>(x.size()));
  for (int i = 0; i < s.n; ++i) s[i] = x[i];
  return s;
}

// direction on S^{q-1} from q-1 angles
Vec spherical_direction(const Vec& angles, int q) {
  Vec d(q);
  if (q == 1) {
    d[0] = 1.0;
  } else if (q == 2) {
    d[0] = std::cos(angles[0]);
    d[1] = std::sin(angles[0]);
  } else if (q == 3) {
    d[0] = std::sin(angles[0]) * std::cos(angles[1]);
    d[1] = std::sin(angles[0]) * std::sin(angles[1]);
    d[2] = std::cos(angles[0]);
  } else {
    throw ConfigError("fiber spheres beyond S^2 are not supported");
  }
  return d;
}

constexpr double kParamStep = 6.0556e-6;  // cbrt(eps) for central differences

}  // namespace

// ---------------------------------------------------------------------------
// Submanifold
// ---------------------------------------------------------------------------

Submanifold Submanifold::from_expressions(int param_dim, std::vector<Expr> components,
                                          bool periodic, const Vec& lo, const Vec& hi) {
  Submanifold s;
  s.m_ = param_dim;
  s.d_ = static_cast<int>(components.size());
  s.comps_ = std::move(components);
  s.periodic_ = periodic;
  s.lo_ = lo;
  s.hi_ = hi;
  return s;
}

Submanifold Submanifold::circle(double radius, const Vec& center) {
  std::vector<Expr> c;
  c.push_back(Expr::parse(format_g17(center[0]) + " + " + format_g17(radius) + "*cos(x0)"));
  c.push_back(Expr::parse(format_g17(center[1]) + " + " + format_g17(radius) + "*sin(x0)"));
  Vec lo(1), hi(1);
  lo[0] = 0.0;
  hi[0] = 2.0 * M_PI;
  return from_expressions(1, std::move(c), true, lo, hi);
}

Submanifold Submanifold::ellipse(double a, double b) {
  std::vector<Expr> c;
  c.push_back(Expr::parse(format_g17(a) + "*cos(x0)"));
  c.push_back(Expr::parse(format_g17(b) + "*sin(x0)"));
  Vec lo(1), hi(1);
  lo[0] = 0.0;
  hi[0] = 2.0 * M_PI;
  return from_expressions(1, std::move(c), true, lo, hi);
}

Submanifold Submanifold::line(const Vec& base, const Vec& dir, double lo_v, double hi_v) {
  std::vector<Expr> c;
  for (int i = 0; i < base.size(); ++i)
    c.push_back(Expr::parse(format_g17(base[i]) + " + x0*" + format_g17(dir[i])));
  Vec lo(1), hi(1);
  lo[0] = lo_v;
  hi[0] = hi_v;
  return from_expressions(1, std::move(c), false, lo, hi);
}

Submanifold Submanifold::point(const Vec& p) {
  Submanifold s;
  s.m_ = 0;
  s.d_ = static_cast<int>(p.size());
  s.periodic_ = false;
  s.point_ = p;
  s.lo_ = Vec(0);
  s.hi_ = Vec(0);
  return s;
}

Submanifold Submanifold::equator(double radius) {
  std::vector<Expr> c;
  c.push_back(Expr::parse(format_g17(radius) + "*cos(x0)"));
  c.push_back(Expr::parse(format_g17(radius) + "*sin(x0)"));
  c.push_back(Expr::constant(0.0));
  Vec lo(1), hi(1);
  lo[0] = 0.0;
  hi[0] = 2.0 * M_PI;
  return from_expressions(1, std::move(c), true, lo, hi);
}

Vec Submanifold::embed(const Vec& params) const {
  if (m_ == 0) return point_;
  SVec<double> x = to_svec(params), dummy;
  Vec out(d_);
  for (int i = 0; i < d_; ++i) out[i] = comps_[static_cast<size_t>(i)].eval(x, dummy);
  return out;
}

Mat Submanifold::tangent_basis(const Vec& params) const {
  if (m_ == 0) return Mat(d_, 0);
  using D1 = Dual<double>;
  Mat J(d_, m_);
  for (int a = 0; a < m_; ++a) {
    SVec<D1> x = lift_vec<D1>(to_svec(params));
    x[a].b = 1.0;
    SVec<D1> dummy;
    for (int i = 0; i < d_; ++i) J(i, a) = comps_[static_cast<size_t>(i)].eval(x, dummy).b;
  }
  Eigen::JacobiSVD<Mat> svd(J);
  if (m_ > 0 && svd.singularValues()(m_ - 1) < 1e-10 * svd.singularValues()(0))
    throw DegenerateTangent("embedding Jacobian is rank deficient");
  return J;
}

// ---------------------------------------------------------------------------
// NormalBundle
// ---------------------------------------------------------------------------

NormalBundle::NormalBundle(Submanifold sub, const GeodesicSystem& sys,
                           std::optional<Vec> interior_point)
    : sub_(std::move(sub)), sys_(&sys), n_(sys.manifold_dim()),
      interior_(std::move(interior_point)) {
  if (sub_.ambient_dim() != sys.ambient_dim())
    throw ConfigError("submanifold ambient dimension does not match the system");
  if (sys.is_embedded()) {
    Vec probe = sub_.embed(sub_.param_dim() ? Vec(0.5 * (sub_.param_lo() + sub_.param_hi()))
                                            : Vec(0));
    if (sys.level_residual(probe) > 1e-9)
      throw ConfigError("submanifold does not lie on the level surface");
  }
}

Mat NormalBundle::normal_frame(const Vec& params) const {
  const int d = sub_.ambient_dim();
  const int m = sub_.param_dim();
  Mat tau = sub_.tangent_basis(params);
  Vec p = sub_.embed(params);
  if (!sys_->is_embedded()) {
    // chart backend: covector frame spanning Ann(T_pN)
    const int q = n_ - m;
    if (m == 0) return Mat::Identity(d, d);  // whole cotangent space
    if (d == 2 && m == 1) {
      Mat out(2, 1);
      out(0, 0) = -tau(1, 0);  // rot90: smooth global orientation for curves
      out(1, 0) = tau(0, 0);
      out.col(0).normalize();
      return out;
    }
    // generic: nullspace of tau^T with sign canonicalized per column
    Eigen::JacobiSVD<Mat> svd(tau.transpose(), Eigen::ComputeFullV);
    Mat V = svd.matrixV();
    Mat out = V.rightCols(q);
    for (int c = 0; c < q; ++c) {
      int imax = 0;
      out.col(c).cwiseAbs().maxCoeff(&imax);
      if (out(imax, c) < 0) out.col(c) *= -1.0;
    }
    return out;
  }
  // embedded backend: tangent-plane directions orthogonal to T_pN
  Vec nh = sys_->surface().unit_normal(p);
  if (m == 0) {
    // orthonormal basis of T_pSurf by Gram-Schmidt over coordinate axes
    Mat out(d, d - 1);
    int got = 0;
    for (int i = 0; i < d && got < d - 1; ++i) {
      Vec cand = Vec::Unit(d, i) - nh * nh[i];
      for (int c = 0; c < got; ++c) cand -= out.col(c) * out.col(c).dot(cand);
      if (cand.norm() > 1e-6) {
        out.col(got++) = cand.normalized();
      }
    }
    if (got != d - 1) throw DegenerateTangent("could not frame the tangent plane");
    return out;
  }
  if (d == 3 && m == 1) {
    Mat out(3, 1);
    Eigen::Vector3d t3(tau(0, 0), tau(1, 0), tau(2, 0));
    Eigen::Vector3d n3(nh[0], nh[1], nh[2]);
    Eigen::Vector3d w = n3.cross(t3).normalized();
    out(0, 0) = w[0];
    out(1, 0) = w[1];
    out(2, 0) = w[2];
    return out;
  }
  // generic: orthogonal complement of span{tau} within the tangent plane
  const int q = n_ - m;
  Mat out(d, q);
  int got = 0;
  for (int i = 0; i < d && got < q; ++i) {
    Vec cand = Vec::Unit(d, i) - nh * nh[i];
    for (int a = 0; a < m; ++a) {
      Vec ta = tau.col(a).normalized();
      cand -= ta * ta.dot(cand);
    }
    for (int c = 0; c < got; ++c) cand -= out.col(c) * out.col(c).dot(cand);
    if (cand.norm() > 1e-6) out.col(got++) = cand.normalized();
  }
  if (got != q) throw DegenerateTangent("could not frame the normal space");
  return out;
}

UnitNormal NormalBundle::unit_normal(const Vec& params, const Vec& angles,
                                     int side) const {
  const int q = codim();
  if (static_cast<int>(angles.size()) != q - 1)
    throw ConfigError("normal chart needs codim-1 fiber angles");
  UnitNormal out;
  out.params = params;
  out.angles = angles;
  out.side = side;
  out.p = sub_.embed(params);

  Mat frame = normal_frame(params);
  Vec dir = spherical_direction(angles, q) * static_cast<double>(side >= 0 ? 1 : -1);
  if (!sys_->is_embedded()) {
    Vec xi = frame * dir;
    Vec u = sys_->metric().legendre_inverse_components(out.p, xi);
    out.v = u / sys_->metric().finsler(out.p, u);
  } else {
    Vec u = frame * dir;  // Euclidean ambient: Legendre is the identity
    out.v = u / u.norm();
  }
  return out;
}

UnitNormal NormalBundle::unit_normal_from_covector(const Vec& params, const Vec& xi) const {
  if (sys_->is_embedded())
    throw ConfigError("covector form is for the chart backend; use the angle chart");
  Mat frame = normal_frame(params);
  Vec coeffs = (frame.transpose() * frame).ldlt().solve(frame.transpose() * xi);
  Vec proj = frame * coeffs;
  if ((proj - xi).norm() > 1e-9 * std::max(1.0, xi.norm()))
    log_info("unit_normal: covector was not in the annihilator; projected (defect %.3e)",
             (proj - xi).norm());
  if (proj.norm() < 1e-13) throw ZeroVector("annihilator projection vanished");

  UnitNormal out;
  out.params = params;
  out.side = 1;
  out.p = sub_.embed(params);
  Vec u = sys_->metric().legendre_inverse_components(out.p, proj);
  out.v = u / sys_->metric().finsler(out.p, u);
  const int q = codim();
  out.angles = Vec::Zero(q - 1);
  if (q == 2) out.angles[0] = std::atan2(coeffs[1], coeffs[0]);
  if (q == 3) {
    double r = coeffs.norm();
    out.angles[0] = std::acos(std::clamp(coeffs[2] / r, -1.0, 1.0));
    out.angles[1] = std::atan2(coeffs[1], coeffs[0]);
  }
  if (q == 1 && coeffs[0] < 0) out.side = -1;
  return out;
}

int NormalBundle::inward_side(const Vec& params) const {
  if (!interior_) return 1;
  UnitNormal plus = unit_normal(params, Vec::Zero(codim() - 1), 1);
  Vec toward = *interior_ - plus.p;
  return plus.v.dot(toward) >= 0.0 ? 1 : -1;
}

void NormalBundle::split_tangent_normal(const Vec& params, const Vec& normal,
                                        const Vec& w, Vec& tangential,
                                        Vec& perpendicular) const {
  Mat tau = sub_.tangent_basis(params);
  const int m = sub_.param_dim();
  Vec p = sub_.embed(params);
  if (m == 0) {
    tangential = Vec::Zero(w.size());
    perpendicular = w;
    return;
  }
  Mat G = sys_->metric_tensor(p, normal);
  Mat gram = tau.transpose() * G * tau;
  Vec coeff = gram.ldlt().solve(tau.transpose() * (G * w));
  tangential = tau * coeff;
  perpendicular = w - tangential;
}

Vec NormalBundle::extension_normal(const Vec& params, const Vec& normal,
                                   const Vec& dparams, double s) const {
  // Local extension n~ via the Legendre transform of a covector field with
  // frozen coefficients in the smooth annihilator frame.
  Vec shifted = params + s * dparams;
  if (!sys_->is_embedded()) {
    Vec p0 = sub_.embed(params);
    Vec xi0 = sys_->metric().legendre_components(p0, normal);
    Mat frame0 = normal_frame(params);
    Vec coeffs = (frame0.transpose() * frame0).ldlt().solve(frame0.transpose() * xi0);
    Mat frame_s = normal_frame(shifted);
    Vec xi_s = frame_s * coeffs;
    Vec ps = sub_.embed(shifted);
    return sys_->metric().legendre_inverse_components(ps, xi_s);
  }
  Mat frame0 = normal_frame(params);
  Vec coeffs = frame0.transpose() * normal;  // orthonormal columns
  Mat frame_s = normal_frame(shifted);
  return frame_s * coeffs;
}

Vec NormalBundle::second_fundamental_form(const Vec& params, const Vec& normal,
                                          const Vec& x, const Vec& y) const {
  const int m = sub_.param_dim();
  if (m == 0) throw DegenerateTangent("second fundamental form of a point");
  Mat tau = sub_.tangent_basis(params);
  // parameter-space representatives of x and y
  Mat gram = tau.transpose() * tau;
  Vec xp = gram.ldlt().solve(tau.transpose() * x);
  Vec yp = gram.ldlt().solve(tau.transpose() * y);

  // Y(s): push yp forward along the param line through x's direction
  const double h = kParamStep * std::max(1.0, params.norm());
  auto Yat = [&](double s) -> Vec { return sub_.tangent_basis(params + s * xp) * yp; };
  Vec dYds = (Yat(h) - Yat(-h)) / (2.0 * h);

  Vec p = sub_.embed(params);
  Vec nablaXY;
  if (sys_->is_embedded()) {
    nablaXY = sys_->surface().project_tangent(p, dYds);
  } else {
    nablaXY = dYds + sys_->gamma_bilinear(p, normal, y, x);
  }
  Vec tang, perp;
  split_tangent_normal(params, normal, nablaXY, tang, perp);
  return -perp;
}

Mat NormalBundle::shape_operator(const Vec& params, const Vec& normal) const {
  const int m = sub_.param_dim();
  Mat A(m, m);
  if (m == 0) return A;
  Mat tau = sub_.tangent_basis(params);
  Mat gram = tau.transpose() * tau;
  Vec p = sub_.embed(params);
  const double h = kParamStep * std::max(1.0, params.norm());
  for (int a = 0; a < m; ++a) {
    Vec dparams = Vec::Unit(m, a);
    Vec dNds = (extension_normal(params, normal, dparams, h) -
                extension_normal(params, normal, dparams, -h)) /
               (2.0 * h);
    Vec nabla;
    if (sys_->is_embedded()) {
      nabla = sys_->surface().project_tangent(p, dNds);
    } else {
      nabla = dNds + sys_->gamma_bilinear(p, normal, normal, tau.col(a));
    }
    Vec tang, perp;
    split_tangent_normal(params, normal, nabla, tang, perp);
    A.col(a) = gram.ldlt().solve(tau.transpose() * tang);
  }
  return A;
}

Vec NormalBundle::shape_apply(const Vec& params, const Vec& normal, const Vec& x) const {
  const int m = sub_.param_dim();
  if (m == 0) return Vec::Zero(x.size());
  Mat tau = sub_.tangent_basis(params);
  Mat gram = tau.transpose() * tau;
  Vec xp = gram.ldlt().solve(tau.transpose() * x);
  return tau * (shape_operator(params, normal) * xp);
}

// ---------------------------------------------------------------------------
// NormalSphereChart
// ---------------------------------------------------------------------------

UnitNormal NormalSphereChart::at(const Vec& s) const {
  const int m = bundle->submanifold().param_dim();
  Vec params = center.params;
  for (int a = 0; a < m; ++a) params[a] += s[a];
  Vec angles = center.angles;
  for (int b = 0; b < angles.size(); ++b) angles[b] += s[m + b];
  return bundle->unit_normal(params, angles, center.side);
}

void NormalSphereChart::axis_rates(int j, double scale_t, Vec& dfoot, Vec& dnormal,
                                   double h) const {
  Vec sp = Vec::Zero(dim()), sm = Vec::Zero(dim());
  sp[j] = h;
  sm[j] = -h;
  UnitNormal up = at(sp), um = at(sm);
  dfoot = (up.p - um.p) / (2.0 * h);
  dnormal = (scale_t * up.v - scale_t * um.v) / (2.0 * h);
}

double NormalSphereChart::axis_scale(int j, double scale_t) const {
  Vec df, dn;
  axis_rates(j, scale_t, df, dn);
  return std::sqrt(df.squaredNorm() + dn.squaredNorm());
}

}  // namespace finfocal
