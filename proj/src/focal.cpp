#include "finfocal/focal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace finfocal {

const char* to_string(LocalForm f) {
  switch (f) {
    case LocalForm::T1: return "T1";
    case LocalForm::T2: return "T2";
    case LocalForm::T3: return "T3";
    case LocalForm::Unclassified: return "unclassified";
  }
  return "?";
}

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b,
                  double tol) {
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<std::pair<double, int>> detect_focal_times(
    const RayFrame& frame, double t_max, const FocalDetectionOptions& opts) {
  const double t_min = opts.t_min_fraction * t_max;
  std::vector<double> ts;
  for (double t : frame.sample_times())
    if (t > t_min && t <= t_max) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  if (ts.size() < 8) throw NumericError("too few samples for focal detection");

  std::vector<double> dets(ts.size());
  double typ = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    dets[i] = frame.detD(ts[i]);
    typ = std::max(typ, std::abs(dets[i]));
  }
  if (typ == 0.0) throw NumericError("degenerate frame: det D vanishes identically");

  auto det_at = [&](double t) { return frame.detD(t); };
  std::vector<double> candidates;

  // simple zeros: sign changes, refined by bisection
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    if (dets[i] == 0.0) {
      candidates.push_back(ts[i]);
      continue;
    }
    if (dets[i] * dets[i + 1] < 0.0) {
      double a = ts[i], b = ts[i + 1], fa = dets[i];
      while (b - a > opts.time_tol) {
        double m = 0.5 * (a + b), fm = det_at(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if (fa * fm < 0.0)
          b = m;
        else {
          a = m;
          fa = fm;
        }
      }
      candidates.push_back(0.5 * (a + b));
    }
  }
  // even-order zeros: local minima of |det| that dip far below scale
  for (size_t i = 1; i + 1 < ts.size(); ++i) {
    double v0 = std::abs(dets[i - 1]), v1 = std::abs(dets[i]), v2 = std::abs(dets[i + 1]);
    if (v1 <= v0 && v1 <= v2 && v1 < opts.min_candidate_ratio * typ) {
      double tz = golden_min([&](double t) { return std::abs(det_at(t)); }, ts[i - 1],
                             ts[i + 1], opts.time_tol);
      candidates.push_back(tz);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  // confirm kernels and deduplicate
  std::vector<std::pair<double, int>> out;
  for (double t : candidates) {
    if (!out.empty()) {
      double gap = t - out.back().first;
      if (gap < 10.0 * opts.time_tol) {
        if (gap > opts.time_tol)
          throw UnresolvedZeroCluster("two focal candidates closer than 10x time tol");
        continue;  // same zero rediscovered
      }
    }
    ExpDifferential ed = exp_differential(frame, t, opts.rank_tol);
    int k = frame.n() - ed.rank;
    if (k < 1) {
      // a sign change guarantees a kernel; a shallow |det| dip may not
      continue;
    }
    if (k > frame.n() - 1)
      throw NumericError("focal multiplicity reached dim M; frame degenerate");
    out.emplace_back(t, k);
  }
  return out;
}

int morse_index(const std::vector<std::pair<double, int>>& focal_times, double T,
                double time_tol) {
  int idx = 0;
  for (const auto& [t, k] : focal_times) {
    if (std::abs(t - T) <= 10.0 * time_tol)
      throw EndpointIsFocal("morse_index at a focal endpoint");
    if (t < T) idx += k;
  }
  return idx;
}

int morse_index(const RayFrame& frame, double T) {
  if (T > frame.horizon()) throw HorizonTooSmall("index horizon beyond frame span");
  return morse_index(detect_focal_times(frame, frame.horizon()), T);
}

double focal_time_j(const std::vector<std::pair<double, int>>& focal_times, int j) {
  if (j < 1) throw NumericError("focal index j must be >= 1");
  int acc = 0;
  for (const auto& [t, k] : focal_times) {
    acc += k;
    if (acc >= j) return t;
  }
  return kInf;
}

double delta_value(const RayFrame& frame, double t, int k) {
  const int n = frame.n();
  if (k < 1) throw NumericError("delta_value needs k >= 1");
  int deg = n - k + 1;
  if (deg <= 0) return 1.0;  // empty product convention
  Mat D = frame.D(t);
  Eigen::JacobiSVD<Mat> svd(D);
  Vec s = svd.singularValues();
  // elementary symmetric e_deg by the usual DP
  Vec e = Vec::Zero(n + 1);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int d = std::min(i + 1, deg); d >= 1; --d) e[d] += s[i] * e[d - 1];
  double det = D.determinant();
  double sign = (det > 0.0) - (det < 0.0);
  if (sign == 0.0) sign = 1.0;
  return e[deg] * sign;
}

WarnerReport warner_checks(const RayFrame& frame, const FocalRecord& record,
                           const NormalSphereChart& chart, double probe_radius,
                           double window) {
  WarnerReport rep;
  const double t = record.time;
  const GeodesicSystem& sys = frame.system();

  // R1: finite-difference radial derivative of E along the ray through t* v
  {
    double h = 1e-4;
    auto deriv = [&](double hh) {
      return Vec(((frame.position(t * (1.0 + hh)) - frame.position(t * (1.0 - hh))) /
                  (2.0 * hh)));
    };
    Vec w = (4.0 * deriv(h / 2) - deriv(h)) / 3.0;
    rep.r1_norm = sys.finsler(frame.position(t), w);
    rep.r1_expected = t * sys.finsler(frame.position(t), frame.velocity(t));
  }

  // R2: Jdot on the kernel, projected modulo Im dE, must have full rank k
  {
    Mat D = frame.D(t);
    Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullU);
    const int n = frame.n();
    int r = 0;
    for (int i = 0; i < n; ++i)
      if (svd.singularValues()(i) >= 1e-7 * svd.singularValues()(0)) ++r;
    Mat Ur = svd.matrixU().leftCols(r);
    Mat Jdots = frame.Dprime(t) * record.kernel_coeffs;
    Mat proj = Jdots - Ur * (Ur.transpose() * Jdots);
    Eigen::JacobiSVD<Mat> s2(proj);
    int k = static_cast<int>(record.kernel_coeffs.cols());
    rep.r2_rank = 0;
    if (k > 0) {
      double smax = s2.singularValues()(0);
      for (int i = 0; i < s2.singularValues().size(); ++i)
        if (s2.singularValues()(i) > 1e-9 * std::max(1.0, smax)) ++rep.r2_rank;
      rep.r2_sigma_ratio =
          s2.singularValues()(s2.singularValues().size() - 1) / smax;
    }
  }

  // R3: every nearby ray carries total multiplicity k inside the window
  {
    const int k = record.multiplicity;
    const int dims = chart.dim();
    double t_lo = std::max(t - window, 1e-3 * frame.horizon());
    double t_hi = std::min(t + window, frame.horizon());
    rep.r3_pass = true;
    for (int axis = 0; axis < dims; ++axis) {
      for (double f : {-1.0, -0.5, 0.5, 1.0}) {
        Vec s = Vec::Zero(dims);
        s[axis] = f * probe_radius;
        UnitNormal u = chart.at(s);
        RayFrame probe(frame.bundle(), u, t_hi, 1e-10);
        FocalDetectionOptions opts;
        opts.t_min_fraction = t_lo / t_hi;
        auto times = detect_focal_times(probe, t_hi, opts);
        int count = 0;
        for (const auto& [tt, kk] : times)
          if (tt > t_lo && tt < t_hi) count += kk;
        rep.r3_counts.push_back(count);
        if (count != k) rep.r3_pass = false;
      }
    }
  }
  return rep;
}

DerivativeReport focal_derivative(const NormalBundle& bundle, const UnitNormal& v,
                                  int j, const Vec& chart_dir, double t_max, double h,
                                  double tol) {
  NormalSphereChart chart{&bundle, v};
  auto lambda_at = [&](double s) {
    UnitNormal u = chart.at(Vec(s * chart_dir));
    RayFrame fr(bundle, u, t_max, tol);
    double lj = focal_time_j(detect_focal_times(fr, t_max), j);
    if (!std::isfinite(lj)) throw HorizonTooSmall("lambda_j beyond horizon in fd probe");
    return lj;
  };
  DerivativeReport rep;
  double d_h = (lambda_at(h) - lambda_at(-h)) / (2.0 * h);
  double d_h2 = (lambda_at(h / 2) - lambda_at(-h / 2)) / h;
  rep.fd = (4.0 * d_h2 - d_h) / 3.0;
  rep.fd_self_consistency = std::abs(rep.fd - d_h2);

  // the shape-operator pairing, evaluated literally
  RayFrame fr(bundle, v, t_max, tol);
  double lj = focal_time_j(detect_focal_times(fr, t_max), j);
  if (!std::isfinite(lj)) throw HorizonTooSmall("lambda_j beyond horizon");
  Vec scaled = lj * v.v;
  // dpi(x) = footpoint velocity of the chart direction
  const double hh = 1e-6;
  UnitNormal up = chart.at(Vec(hh * chart_dir)), um = chart.at(Vec(-hh * chart_dir));
  Vec dpix = (up.p - um.p) / (2.0 * hh);
  Vec Adpix = bundle.shape_apply(v.params, scaled, dpix);
  Mat G = bundle.system().metric_tensor(v.p, v.v);
  rep.shape_pairing = scaled.dot(G * Adpix) / std::sqrt(lj);
  rep.discrepancy = std::abs(rep.fd - rep.shape_pairing);
  return rep;
}

WitnessPair non_injectivity_witness(const RayFrame& frame, const FocalRecord& record,
                                    const NormalSphereChart& chart, double eps,
                                    double delta, double tol) {
  const GeodesicSystem& sys = frame.system();
  const double tstar = record.time;
  const int dims = chart.dim();

  auto cone_distance = [&](const UnitNormal& a, double ta, const UnitNormal& b,
                           double tb) {
    return std::sqrt((a.p - b.p).squaredNorm() + (ta * a.v - tb * b.v).squaredNorm());
  };

  // candidate chart offsets, nearest pairs first
  std::vector<double> offs;
  for (int i = 1; i <= 6; ++i) offs.push_back(eps * i / 6.0);

  std::string diag;
  for (int axis = 0; axis < dims; ++axis) {
    for (double off : offs) {
      Vec s1 = Vec::Zero(dims), s2 = Vec::Zero(dims);
      s1[axis] = off;
      s2[axis] = -off;
      UnitNormal u1 = chart.at(s1), u2 = chart.at(s2);
      GeodesicPath p1 = integrate_geodesic(sys, Point{u1.p}, Vector{Point{u1.p}, u1.v},
                                           1.5 * tstar + 0.5, tol);
      GeodesicPath p2 = integrate_geodesic(sys, Point{u2.p}, Vector{Point{u2.p}, u2.v},
                                           1.5 * tstar + 0.5, tol);
      double t1 = tstar, t2 = tstar;
      for (int it = 0; it < 60; ++it) {
        Vec r = p1.position(t1) - p2.position(t2);
        if (r.norm() <= 1e-9) break;
        Mat J(r.size(), 2);
        J.col(0) = p1.velocity(t1);
        J.col(1) = -p2.velocity(t2);
        Vec step = (J.transpose() * J).ldlt().solve(J.transpose() * r);
        double lim = 0.2 * tstar;
        step = step.cwiseMax(-lim).cwiseMin(lim);
        t1 -= step[0];
        t2 -= step[1];
        t1 = std::clamp(t1, 0.05 * tstar, 1.4 * tstar + 0.4);
        t2 = std::clamp(t2, 0.05 * tstar, 1.4 * tstar + 0.4);
        if (step.norm() < 1e-13 * tstar) break;
      }
      Vec img1 = p1.position(t1), img2 = p2.position(t2);
      double img_dist = (img1 - img2).norm();
      double sep = cone_distance(u1, t1, u2, t2);
      if (img_dist <= 1e-6 && sep >= delta) {
        WitnessPair w;
        w.u1 = u1;
        w.u2 = u2;
        w.t1 = t1;
        w.t2 = t2;
        w.image_distance = img_dist;
        w.preimage_separation = sep;
        return w;
      }
      diag += " (axis " + std::to_string(axis) + " off " + format_g17(off) +
              ": img " + format_g17(img_dist) + " sep " + format_g17(sep) + ")";
    }
  }
  throw WitnessNotFound("no non-injectivity witness near focal point; tried" + diag);
}

}  // namespace finfocal
