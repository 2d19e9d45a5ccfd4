#include "finfocal/scan.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace finfocal {

std::vector<FocalRecord> FocalScanResult::flat() const {
  std::vector<FocalRecord> out;
  for (const auto& rr : per_ray) out.insert(out.end(), rr.begin(), rr.end());
  return out;
}

double probe_window(const std::vector<FocalRecord>& ray_records, size_t idx,
                    double t_max) {
  const double t = ray_records[idx].time;
  double gap = kInf;
  for (size_t j = 0; j < ray_records.size(); ++j) {
    if (j == idx) continue;
    gap = std::min(gap, std::abs(ray_records[j].time - t));
  }
  double w = std::isfinite(gap) ? 0.5 * gap : 0.9 * std::min(t, t_max - t);
  return std::min(w, 0.45 * t);
}

FocalScanResult focal_scan(const RayGrid& grid, const FocalScanSettings& settings) {
  const int R = grid.size();
  const int n = grid.bundle().manifold_dim();
  FocalScanResult result;
  result.per_ray.resize(static_cast<size_t>(R));
  result.lambda.resize(static_cast<size_t>(R));

  // phase 1: per-ray detection (parallel, stored by index)
  parallel_for(R, settings.threads, [&](int r) {
    UnitNormal u = grid.normal(r);
    RayFrame frame(grid.bundle(), u, settings.t_max, settings.integrator_tol);
    auto times = detect_focal_times(frame, settings.t_max, settings.detect);

    auto& recs = result.per_ray[static_cast<size_t>(r)];
    NormalSphereChart chart = grid.chart_at(r);
    int acc = 0;
    for (const auto& [t, k] : times) {
      FocalRecord rec;
      rec.ray = r;
      rec.time = t;
      rec.multiplicity = k;
      rec.order = acc + 1;
      acc += k;
      rec.image = frame.position(t);
      ExpDifferential ed = exp_differential(frame, t, settings.detect.rank_tol);
      rec.kernel_coeffs = ed.kernel;
      rec.sigma_ratio = ed.singular_values[n - 1] / ed.singular_values[0];
      {
        const double h = 1e-5 * std::max(1.0, t);
        rec.delta_radial_derivative =
            (delta_value(frame, t + h, k) - delta_value(frame, t - h, k)) / (2.0 * h);
      }
      rec.chart_scales = Vec(n - 1);
      for (int j = 0; j < n - 1; ++j) rec.chart_scales[j] = chart.axis_scale(j, t);
      if (ed.kernel.cols() > 0) {
        rec.kernel_chart_cols = Mat(n, ed.kernel.cols());
        for (int kc = 0; kc < ed.kernel.cols(); ++kc) {
          Vec beta = kernel_chart_components(frame, chart, t, ed.kernel.col(kc));
          Vec scaled(n);
          for (int j = 0; j < n - 1; ++j) scaled[j] = beta[j] * rec.chart_scales[j];
          scaled[n - 1] = beta[n - 1] * u.v.norm();
          rec.kernel_chart_cols.col(kc) = scaled.normalized();
        }
        rec.kernel_chart = rec.kernel_chart_cols.col(0);
      }
      recs.push_back(std::move(rec));
    }
    auto& lam = result.lambda[static_cast<size_t>(r)];
    for (int j = 1; j <= settings.max_focal_index; ++j)
      lam.push_back(focal_time_j(times, j));
  });

  if (!settings.classify) return result;

  // phase 2: regularity and T1/T2/T3 from the neighboring rays' records
  for (int r = 0; r < R; ++r) {
    auto& recs = result.per_ray[static_cast<size_t>(r)];
    for (size_t ri = 0; ri < recs.size(); ++ri) {
      FocalRecord& rec = recs[ri];
      const double w = probe_window(recs, ri, settings.t_max);
      std::vector<int> nbrs = grid.neighbors(r, settings.neighbor_ring);

      bool regular = true;
      std::vector<Vec> plane_pts;  // scaled chart offsets of neighbor records
      int with_record = 0;
      for (int nb : nbrs) {
        const auto& nrecs = result.per_ray[static_cast<size_t>(nb)];
        int in_window = 0;
        const FocalRecord* hit = nullptr;
        for (const FocalRecord& nr : nrecs) {
          if (std::abs(nr.time - rec.time) < w) {
            ++in_window;
            hit = &nr;
          }
        }
        if (in_window > 1) regular = false;
        if (in_window == 1) {
          ++with_record;
          if (hit->multiplicity != rec.multiplicity) regular = false;
          Vec off = grid.chart_offset(r, nb);
          Vec z(n);
          for (int j = 0; j < n - 1; ++j) z[j] = off[j] * rec.chart_scales[j];
          z[n - 1] = (hit->time - rec.time) * grid.normal(r).v.norm();
          plane_pts.push_back(z);
        }
      }
      rec.regular = regular && with_record > 0;

      // least-squares tangent plane of the focal set in scaled chart coords
      double angle = -1.0;
      if (static_cast<int>(plane_pts.size()) >= n - 1 &&
          rec.kernel_chart_cols.cols() > 0) {
        Mat Z(static_cast<int>(plane_pts.size()), n);
        for (size_t i = 0; i < plane_pts.size(); ++i)
          Z.row(static_cast<int>(i)) = plane_pts[i].transpose();
        Eigen::JacobiSVD<Mat> svd(Z, Eigen::ComputeFullV);
        Vec normal = svd.matrixV().col(n - 1);
        angle = 0.0;
        for (int kc = 0; kc < rec.kernel_chart_cols.cols(); ++kc)
          angle = std::max(
              angle, std::asin(std::min(
                         1.0, std::abs(normal.dot(rec.kernel_chart_cols.col(kc))))) *
                         180.0 / M_PI);
        rec.kernel_plane_angle = angle;
      }
      if (rec.multiplicity >= 2) {
        rec.localform = LocalForm::T1;  // kernel-in-plane angle recorded above
        rec.classified = true;
      } else if (angle >= 0.0) {
        rec.classified = true;
        if (angle < settings.t2_angle_deg)
          rec.localform = LocalForm::T2;
        else if (angle > settings.t3_angle_deg)
          rec.localform = LocalForm::T3;
        else
          rec.localform = LocalForm::Unclassified;
      }
    }
  }
  return result;
}

bool WarnerScanResult::all_pass(double r1_tol, double sigma_min) const {
  for (const WarnerReport& r : reports) {
    if (std::abs(r.r1_norm - r.r1_expected) > r1_tol) return false;
    if (r.r2_sigma_ratio < sigma_min) return false;
    if (!r.r3_pass) return false;
  }
  return true;
}

WarnerScanResult warner_scan(const RayGrid& grid, const FocalScanResult& scan,
                             double probe_radius, double integrator_tol, int threads) {
  std::vector<FocalRecord> flat = scan.flat();
  WarnerScanResult out;
  out.reports.resize(flat.size());
  parallel_for(static_cast<int>(flat.size()), threads, [&](int i) {
    const FocalRecord& rec = flat[static_cast<size_t>(i)];
    const auto& ray_records = scan.per_ray[static_cast<size_t>(rec.ray)];
    size_t idx = 0;
    for (size_t j = 0; j < ray_records.size(); ++j)
      if (std::abs(ray_records[j].time - rec.time) < 1e-12) idx = j;
    double t_hi = rec.time + probe_window(ray_records, idx, kInf);
    UnitNormal u = grid.normal(rec.ray);
    RayFrame frame(grid.bundle(), u, std::max(t_hi * 1.01, rec.time * 1.05),
                   integrator_tol);
    NormalSphereChart chart = grid.chart_at(rec.ray);
    double window = probe_window(ray_records, idx, frame.horizon());
    out.reports[static_cast<size_t>(i)] =
        warner_checks(frame, rec, chart, probe_radius, window);
  });
  return out;
}

}  // namespace finfocal
