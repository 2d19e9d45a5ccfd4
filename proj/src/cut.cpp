#include "finfocal/cut.hpp"

#include <algorithm>
#include <cmath>

namespace finfocal {

const char* to_string(CutReason r) {
  switch (r) {
    case CutReason::Separating: return "separating";
    case CutReason::Focal: return "focal";
    case CutReason::Horizon: return "horizon";
  }
  return "?";
}

namespace {

double cone_dist(const UnitNormal& a, double ta, const UnitNormal& b, double tb) {
  return std::sqrt((a.p - b.p).squaredNorm() + (ta * a.v - tb * b.v).squaredNorm());
}

}  // namespace

CutAnalyzer::CutAnalyzer(const RayGrid& grid, const CutSettings& settings)
    : grid_(&grid), settings_(settings) {
  // straight chords measure exactly under position-independent chart metrics,
  // so concatenation legs of any length are sound there and d(N, .) has an
  // exact point-set form; the predicate slack tightens accordingly
  const GeodesicSystem& gsys = grid.bundle().system();
  if (!gsys.is_embedded() && gsys.metric().position_independent()) {
    settings_.max_leg = kInf;
    flat_exact_ = true;
    settings_.predicate_tol = std::min(settings_.predicate_tol, 3e-6);
    settings_.bisect_tol = std::min(settings_.bisect_tol, 2e-5);
    const Submanifold& sub = grid.bundle().submanifold();
    if (sub.param_dim() == 1) {
      const int M = 4096;
      double lo = sub.param_lo()[0], hi = sub.param_hi()[0];
      n_params_ = Vec(M + 1);
      n_samples_ = Mat(gsys.ambient_dim(), M + 1);
      for (int i = 0; i <= M; ++i) {
        n_params_[i] = lo + (hi - lo) * i / M;
        n_samples_.col(i) = sub.embed(Vec(n_params_.segment(i, 1)));
      }
    } else if (sub.param_dim() == 0) {
      n_params_ = Vec(1);
      n_samples_ = sub.embed(Vec(0));
    } else {
      flat_exact_ = false;  // no dense sampling for higher-dimensional N
    }
  }
  const int R = grid.size();
  const int S = settings_.samples_per_ray;
  dt_ = settings_.t_max / S;
  samples_.resize(static_cast<size_t>(R));
  lambda1_.assign(static_cast<size_t>(R), kInf);

  const NormalBundle& bundle = grid.bundle();
  const int d = bundle.system().ambient_dim();
  parallel_for(R, settings_.threads, [&](int r) {
    UnitNormal u = grid.normal(r);
    RayFrame frame(bundle, u, settings_.t_max, settings_.integrator_tol);
    Mat pos(d, S + 1);
    for (int i = 0; i <= S; ++i) pos.col(i) = frame.position(i * dt_);
    samples_[static_cast<size_t>(r)] = std::move(pos);
    lambda1_[static_cast<size_t>(r)] =
        focal_time_j(detect_focal_times(frame, settings_.t_max), 1);
  });
}

Vec CutAnalyzer::ray_position(int ray, double t) const {
  const Mat& pos = samples_[static_cast<size_t>(ray)];
  const int S = static_cast<int>(pos.cols()) - 1;
  double u = std::clamp(t / dt_, 0.0, static_cast<double>(S));
  int i = std::clamp(static_cast<int>(std::floor(u)), 1, S - 1);
  double s = u - i;  // in [-1, 1] around node i
  // quadratic Lagrange through nodes i-1, i, i+1
  double w0 = 0.5 * s * (s - 1.0), w1 = (1.0 - s) * (1.0 + s), w2 = 0.5 * s * (s + 1.0);
  return w0 * pos.col(i - 1) + w1 * pos.col(i) + w2 * pos.col(i + 1);
}

double CutAnalyzer::flat_distance(const Vec& q) const {
  const MetricModel& metric = grid_->bundle().system().metric();
  const Submanifold& sub = grid_->bundle().submanifold();
  auto leg = [&](const Vec& p) {
    Vec chord = q - p;
    double len = chord.norm();
    return len < 1e-14 ? 0.0 : metric.finsler(p, chord);
  };
  const int M = static_cast<int>(n_params_.size());
  if (M == 1) return leg(n_samples_.col(0));
  double best = kInf;
  int bi = 0;
  for (int i = 0; i < M; ++i) {
    double a = leg(n_samples_.col(i));
    if (a < best) {
      best = a;
      bi = i;
    }
  }
  // golden refine over the parameter around the winning sample
  double span = n_params_[1] - n_params_[0];
  double a = n_params_[bi] - span, b = n_params_[bi] + span;
  auto f = [&](double th) { return leg(sub.embed(Vec(Vec::Constant(1, th)))); };
  if (!sub.periodic()) {
    a = std::max(a, sub.param_lo()[0]);
    b = std::min(b, sub.param_hi()[0]);
  }
  const double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
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
  return std::min(best, f(0.5 * (a + b)));
}

double CutAnalyzer::arrival_estimate(const Vec& q, int* best_ray, double* best_t) const {
  const MetricModel& metric = grid_->bundle().system().metric();
  const int R = grid_->size();
  const int S = settings_.samples_per_ray;
  // legs beyond max_leg are rejected: the true minimizing foot passes within
  // a half ray spacing of q, and short chords bound geodesic arcs tightly
  auto arrival_at = [&](const Mat& pos, int i) {
    Vec chord = q - pos.col(i);
    double len = chord.norm();
    double t = i * dt_;
    if (len < 1e-13) return t;
    if (len > settings_.max_leg) return kInf;
    return t + metric.finsler(pos.col(i), chord);
  };

  // coarse pass
  const int stride = 8;
  std::vector<std::pair<double, int>> coarse(static_cast<size_t>(R));
  double global = kInf;
  std::vector<int> argmin(static_cast<size_t>(R), 0);
  for (int r = 0; r < R; ++r) {
    const Mat& pos = samples_[static_cast<size_t>(r)];
    double best = kInf;
    int bi = 0;
    for (int i = 0; i <= S; i += stride) {
      double a = arrival_at(pos, i);
      if (a < best) {
        best = a;
        bi = i;
      }
    }
    coarse[static_cast<size_t>(r)] = {best, r};
    argmin[static_cast<size_t>(r)] = bi;
    global = std::min(global, best);
  }

  // refine rays whose coarse minimum could still win
  double margin = 2.0 * stride * dt_;
  double out = kInf;
  int out_ray = -1;
  double out_t = 0.0;
  for (int r = 0; r < R; ++r) {
    if (coarse[static_cast<size_t>(r)].first > global + margin) continue;
    const Mat& pos = samples_[static_cast<size_t>(r)];
    int c = argmin[static_cast<size_t>(r)];
    int lo = std::max(0, c - stride), hi = std::min(S, c + stride);
    double best = kInf;
    int bi = lo;
    for (int i = lo; i <= hi; ++i) {
      double a = arrival_at(pos, i);
      if (a < best) {
        best = a;
        bi = i;
      }
    }
    // parabolic touch-up between samples
    double t_ref = bi * dt_;
    if (bi > 0 && bi < S && std::isfinite(best)) {
      double a0 = arrival_at(pos, bi - 1), a1 = best, a2 = arrival_at(pos, bi + 1);
      double denom = a0 - 2.0 * a1 + a2;
      if (std::isfinite(a0) && std::isfinite(a2) && std::abs(denom) > 1e-14) {
        double shift = 0.5 * (a0 - a2) / denom;
        shift = std::clamp(shift, -1.0, 1.0);
        double tt = (bi + shift) * dt_;
        Vec p = ray_position(r, tt);
        Vec chord = q - p;
        double a = (chord.norm() < 1e-13) ? tt : tt + metric.finsler(p, chord);
        if (a < best) {
          best = a;
          t_ref = tt;
        }
      }
    }
    if (best < out) {
      out = best;
      out_ray = r;
      out_t = t_ref;
    }
  }
  if (best_ray) *best_ray = out_ray;
  if (best_t) *best_t = out_t;
  return out;
}

CutAnalyzer::Refined CutAnalyzer::refine_foot(int ray, double t_seed, const Vec& q,
                                              double residual_target) const {
  const NormalBundle& bundle = grid_->bundle();
  const GeodesicSystem& sys = bundle.system();
  NormalSphereChart chart = grid_->chart_at(ray);
  const int dims = chart.dim();

  Refined out;
  Vec s = Vec::Zero(dims);
  double t = std::max(t_seed, 1e-3);
  const double hs = 1e-6;

  auto shoot = [&](const Vec& soff, double horizon) {
    UnitNormal u = chart.at(soff);
    return integrate_geodesic(sys, Point{u.p}, Vector{Point{u.p}, u.v}, horizon,
                              settings_.integrator_tol);
  };

  double horizon = std::min(settings_.t_max * 1.2, t * 1.5 + 0.5);
  double res = kInf;
  for (int it = 0; it < 25; ++it) {
    GeodesicPath center = shoot(s, horizon);
    Vec r = center.position(t) - q;
    res = r.norm();
    if (res <= residual_target) break;
    Mat J(r.size(), dims + 1);
    for (int a = 0; a < dims; ++a) {
      Vec sp = s, sm = s;
      sp[a] += hs;
      sm[a] -= hs;
      J.col(a) = (shoot(sp, horizon).position(t) - shoot(sm, horizon).position(t)) /
                 (2.0 * hs);
    }
    J.col(dims) = center.velocity(t);
    Vec step = (J.transpose() * J + 1e-14 * Mat::Identity(dims + 1, dims + 1))
                   .ldlt()
                   .solve(J.transpose() * r);
    double lambda = 1.0;
    bool moved = false;
    for (int half = 0; half < 12; ++half) {
      Vec s_try = s - lambda * step.head(dims);
      double t_try = t - lambda * step[dims];
      if (t_try > 1e-3 && t_try < settings_.t_max * 1.2) {
        GeodesicPath trial = shoot(s_try, std::max(horizon, t_try + 0.1));
        double res_try = (trial.position(t_try) - q).norm();
        if (res_try < res) {
          s = s_try;
          t = t_try;
          horizon = std::max(horizon, t + 0.1);
          moved = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!moved) break;
  }
  out.t = t;
  out.residual = res;
  out.chart_s = s;
  out.u = chart.at(s);
  out.ok = res <= residual_target;
  return out;
}

DistanceResult CutAnalyzer::distance_to_point(const Vec& q) const {
  const int R = grid_->size();
  const int S = settings_.samples_per_ray;
  const MetricModel& metric = grid_->bundle().system().metric();

  // multi-start over the S(nu) grid (subsampled to `starts` rays), coarse
  // closest-arrival per start, then GN refinement of the leaders
  int starts = std::min(settings_.starts <= 0 ? R : settings_.starts, R);
  std::vector<std::pair<double, std::pair<int, double>>> cands;
  for (int k = 0; k < starts; ++k) {
    int r = static_cast<int>(static_cast<long>(k) * R / starts);
    const Mat& pos = samples_[static_cast<size_t>(r)];
    double best = kInf;
    double bt = 0.0;
    for (int i = 0; i <= S; i += 2) {
      Vec chord = q - pos.col(i);
      double len = chord.norm();
      double a = (len < 1e-13) ? i * dt_ : i * dt_ + metric.finsler(pos.col(i), chord);
      if (a < best) {
        best = a;
        bt = i * dt_;
      }
    }
    cands.push_back({best, {r, bt}});
  }
  std::sort(cands.begin(), cands.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  DistanceResult result;
  std::vector<Foot> feet;
  int refined = 0;
  for (const auto& c : cands) {
    if (refined >= 6 && c.first > (feet.empty() ? kInf : result.distance) + 4.0 * dt_)
      break;
    if (refined >= 12) break;
    Refined f = refine_foot(c.second.first, c.second.second, q, 1e-8);
    ++refined;
    if (!f.ok) continue;
    Foot foot;
    foot.direction = f.u;
    foot.time = f.t;
    foot.residual = f.residual;
    if (feet.empty() || f.t < result.distance) result.distance = f.t;
    feet.push_back(std::move(foot));
  }
  if (feet.empty()) throw NoConvergentFoot("no shooting start refined to the target");

  // keep minimizers within the tolerance band, deduplicated by foot position
  std::sort(feet.begin(), feet.end(),
            [](const Foot& a, const Foot& b) { return a.time < b.time; });
  result.distance = feet.front().time;
  for (const Foot& f : feet) {
    if (f.time > result.distance + 1e-6) break;
    bool dup = false;
    for (const Foot& kept : result.feet)
      if ((kept.direction.p - f.direction.p).norm() +
              (kept.direction.v - f.direction.v).norm() <
          1e-4)
        dup = true;
    if (!dup) result.feet.push_back(f);
  }
  return result;
}

std::optional<Foot> CutAnalyzer::separating_witness(int ray, double rho,
                                                    double time_tol,
                                                    double image_tol) const {
  const int R = grid_->size();
  Vec q = ray_position(ray, rho);
  const UnitNormal self = grid_->normal(ray);
  double delta = settings_.witness_delta > 0.0
                     ? settings_.witness_delta
                     : 1.5 * cone_dist(self, rho, grid_->normal(grid_->neighbors(ray, 1)[0]),
                                        rho);

  // rank candidate rays by how close their concatenation arrival at q sits to
  // rho: a second foot must arrive at the same point at the same time
  std::vector<std::pair<double, std::pair<int, double>>> cands;
  const MetricModel& metric = grid_->bundle().system().metric();
  for (int r = 0; r < R; ++r) {
    if (r == ray) continue;
    const Mat& pos = samples_[static_cast<size_t>(r)];
    const int S = settings_.samples_per_ray;
    int lo = std::max(0, static_cast<int>((rho - 8.0 * time_tol - 0.05) / dt_));
    int hi = std::min(S, static_cast<int>((rho + 8.0 * time_tol + 0.05) / dt_) + 1);
    double score = kInf;
    double bt = 0.0;
    for (int i = lo; i <= hi; ++i) {
      Vec chord = q - pos.col(i);
      double len = chord.norm();
      if (len > 0.1) continue;  // only near passes can refine onto q
      double arrival = i * dt_ + ((len < 1e-13) ? 0.0 : metric.finsler(pos.col(i), chord));
      double sc = std::abs(arrival - rho);
      if (sc < score) {
        score = sc;
        bt = i * dt_;
      }
    }
    if (!std::isfinite(score)) continue;
    UnitNormal u = grid_->normal(r);
    if (cone_dist(self, rho, u, bt) < delta) continue;
    cands.push_back({score, {r, bt}});
  }
  std::sort(cands.begin(), cands.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  for (size_t i = 0; i < cands.size() && i < 8; ++i) {
    if (cands[i].first > 4.0 * time_tol + 8.0 * dt_) break;
    Refined f = refine_foot(cands[i].second.first, cands[i].second.second, q,
                            image_tol * 0.99);
    if (!f.ok) continue;
    if (std::abs(f.t - rho) > time_tol) continue;
    if (cone_dist(self, rho, f.u, f.t) < delta) continue;
    Foot foot;
    foot.direction = f.u;
    foot.time = f.t;
    foot.residual = f.residual;
    return foot;
  }
  return std::nullopt;
}

CutRecord CutAnalyzer::cut_time(int ray) const {
  CutRecord rec;
  rec.ray = ray;
  rec.direction = grid_->normal(ray);
  rec.lambda1 = lambda1_[static_cast<size_t>(ray)];

  const double t_max = settings_.t_max;
  double hi = std::min(rec.lambda1, t_max);
  auto predicate = [&](double t) {
    Vec q = ray_position(ray, t);
    double est = flat_exact_ ? flat_distance(q) : arrival_estimate(q);
    return est >= t - settings_.predicate_tol;
  };

  double lo = std::max(0.05 * hi, 4.0 * settings_.predicate_tol);
  for (int tries = 0; tries < 6 && !predicate(lo); ++tries) lo *= 0.5;
  if (!predicate(lo))
    throw OracleFailure("cut predicate fails near N; atlas inconsistent");

  double rho;
  if (predicate(hi - 10.0 * settings_.bisect_tol)) {
    rho = hi;
  } else {
    double a = lo, b = hi - 10.0 * settings_.bisect_tol;
    while (b - a > settings_.bisect_tol) {
      double m = 0.5 * (a + b);
      if (predicate(m))
        a = m;
      else
        b = m;
    }
    rho = 0.5 * (a + b);
  }
  rho = std::min(rho, rec.lambda1);

  rec.horizon = (rho >= t_max - 10.0 * settings_.bisect_tol) && (rec.lambda1 > t_max);
  if (rec.horizon) {
    rec.rho = kInf;  // undecidable beyond the horizon; flagged, not asserted
    rec.reason = CutReason::Horizon;
    return rec;
  }
  rec.rho = rho;
  rec.image = ray_position(ray, rho);
  rec.focal = std::isfinite(rec.lambda1) &&
              std::abs(rho - rec.lambda1) <= settings_.report_tol;
  rec.witness = separating_witness(ray, rho, settings_.report_tol,
                                   settings_.witness_image_tol);
  rec.separating = rec.witness.has_value();
  rec.reason = rec.separating ? CutReason::Separating
                              : (rec.focal ? CutReason::Focal : CutReason::Separating);
  return rec;
}

std::vector<CutRecord> CutAnalyzer::scan() const {
  std::vector<CutRecord> out(static_cast<size_t>(grid_->size()));
  parallel_for(grid_->size(), settings_.threads,
               [&](int r) { out[static_cast<size_t>(r)] = cut_time(r); });
  return out;
}

double CutAnalyzer::closure_fraction(const std::vector<CutRecord>& records, double eps) {
  std::vector<const CutRecord*> finite, sep;
  for (const CutRecord& r : records) {
    if (!std::isfinite(r.rho)) continue;
    finite.push_back(&r);
    if (r.separating) sep.push_back(&r);
  }
  if (finite.empty()) return 1.0;
  int good = 0;
  for (const CutRecord* r : finite) {
    double best = kInf;
    for (const CutRecord* s : sep)
      best = std::min(best, cone_dist(r->direction, r->rho, s->direction, s->rho));
    if (best <= eps) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(finite.size());
}

double CutAnalyzer::max_rho_minus_lambda(const std::vector<CutRecord>& records) {
  double worst = -kInf;
  for (const CutRecord& r : records)
    if (std::isfinite(r.rho) && std::isfinite(r.lambda1))
      worst = std::max(worst, r.rho - r.lambda1);
  return worst;
}

double CutAnalyzer::cut_grid_spacing(const std::vector<CutRecord>& records,
                                     const RayGrid& grid) {
  std::vector<double> gaps;
  for (const CutRecord& r : records) {
    if (!std::isfinite(r.rho)) continue;
    for (int nb : grid.neighbors(r.ray, 1)) {
      const CutRecord& s = records[static_cast<size_t>(nb)];
      if (!std::isfinite(s.rho)) continue;
      gaps.push_back(cone_dist(r.direction, r.rho, s.direction, s.rho));
    }
  }
  if (gaps.empty()) return 0.0;
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

T3CutReport t3_not_cut_check(const FocalScanResultRef& focal,
                             const std::vector<CutRecord>& cut, double tol) {
  T3CutReport rep;
  const auto& per_ray = *focal.per_ray;
  const RayGrid& grid = *focal.grid;
  for (const auto& recs : per_ray) {
    for (const FocalRecord& f : recs) {
      if (f.localform != LocalForm::T3) continue;
      ++rep.t3_records;
      const CutRecord& c = cut[static_cast<size_t>(f.ray)];
      bool near = std::isfinite(c.rho) && std::abs(c.rho - f.time) <= tol;
      if (!near) {
        ++rep.clear;
        continue;
      }
      // arc-interior iff every neighboring ray carries a T3 record near this
      // time; boundary records sit under the cut resolution and are flagged
      bool interior = true;
      for (int nb : grid.neighbors(f.ray, 2)) {
        bool has_t3 = false;
        for (const FocalRecord& g : per_ray[static_cast<size_t>(nb)])
          if (g.localform == LocalForm::T3 && std::abs(g.time - f.time) < 0.3 * f.time)
            has_t3 = true;
        if (!has_t3) interior = false;
      }
      if (interior) {
        ++rep.coincidences;
        rep.violating_rays.push_back(f.ray);
      } else {
        ++rep.flagged;
        rep.flagged_rays.push_back(f.ray);
      }
    }
  }
  return rep;
}

}  // namespace finfocal
