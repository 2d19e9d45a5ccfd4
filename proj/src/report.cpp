#include "finfocal/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace finfocal {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += "\"";
  return out;
}

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_g17(x);
}

void append_vec(std::ostringstream& os, const Vec& v, int pad) {
  for (int i = 0; i < pad; ++i) {
    os << ",";
    if (i < v.size()) os << num(v[i]);
  }
}

}  // namespace

std::string focal_scan_csv(const Scenario& scenario, const FocalScanResult& scan) {
  const int n = scenario.bundle().manifold_dim();
  const int d = scenario.system().ambient_dim();
  const int J = static_cast<int>(scenario.focal_settings(1).max_focal_index);
  std::ostringstream os;
  os << "ray,side";
  for (int i = 0; i < 2; ++i) os << ",s" << i;
  os << ",focal_time,multiplicity,order,regular,localform,delta_radial_derivative,"
        "sigma_ratio,kernel_plane_angle_deg";
  for (int i = 0; i < d; ++i) os << ",image" << i;
  for (int i = 0; i < n; ++i) os << ",kernel_chart" << i;
  for (int jj = 1; jj <= J; ++jj) os << ",lambda_" << jj;
  os << "\n";

  const RayGrid& grid = scenario.grid();
  for (int r = 0; r < grid.size(); ++r) {
    const auto& recs = scan.per_ray[static_cast<size_t>(r)];
    for (const FocalRecord& rec : recs) {
      const RayGrid::Spec& sp = grid.spec(r);
      os << r << "," << sp.side;
      Vec chart(2);
      chart.setZero();
      int c = 0;
      for (int i = 0; i < sp.params.size() && c < 2; ++i) chart[c++] = sp.params[i];
      for (int i = 0; i < sp.angles.size() && c < 2; ++i) chart[c++] = sp.angles[i];
      for (int i = 0; i < 2; ++i) os << "," << num(chart[i]);
      os << "," << num(rec.time) << "," << rec.multiplicity << "," << rec.order << ","
         << (rec.regular ? 1 : 0) << "," << csv_field(to_string(rec.localform)) << ","
         << num(rec.delta_radial_derivative) << "," << num(rec.sigma_ratio) << ","
         << num(rec.kernel_plane_angle);
      append_vec(os, rec.image, d);
      append_vec(os, rec.kernel_chart, n);
      const auto& lam = scan.lambda[static_cast<size_t>(r)];
      for (int jj = 0; jj < J; ++jj)
        os << "," << num(jj < static_cast<int>(lam.size()) ? lam[static_cast<size_t>(jj)]
                                                           : kInf);
      os << "\n";
    }
  }
  return os.str();
}

std::string cut_scan_csv(const Scenario& scenario, const std::vector<CutRecord>& records) {
  const int d = scenario.system().ambient_dim();
  std::ostringstream os;
  os << "ray,side";
  for (int i = 0; i < 2; ++i) os << ",s" << i;
  os << ",rho,reason,separating,focal,horizon,lambda_1,witness_time";
  for (int i = 0; i < d; ++i) os << ",image" << i;
  os << "\n";
  const RayGrid& grid = scenario.grid();
  for (const CutRecord& rec : records) {
    const RayGrid::Spec& sp = grid.spec(rec.ray);
    os << rec.ray << "," << sp.side;
    Vec chart(2);
    chart.setZero();
    int c = 0;
    for (int i = 0; i < sp.params.size() && c < 2; ++i) chart[c++] = sp.params[i];
    for (int i = 0; i < sp.angles.size() && c < 2; ++i) chart[c++] = sp.angles[i];
    for (int i = 0; i < 2; ++i) os << "," << num(chart[i]);
    os << "," << num(rec.rho) << "," << csv_field(to_string(rec.reason)) << ","
       << (rec.separating ? 1 : 0) << "," << (rec.focal ? 1 : 0) << ","
       << (rec.horizon ? 1 : 0) << "," << num(rec.lambda1) << ","
       << num(rec.witness ? rec.witness->time : kInf);
    Vec img = std::isfinite(rec.rho) ? rec.image : Vec();
    append_vec(os, img, d);
    os << "\n";
  }
  return os.str();
}

Json focal_scan_summary(const Scenario& scenario, const FocalScanResult& scan) {
  Json j = scenario.summary_header("focal-scan");
  int records = 0, regular = 0, t1 = 0, t2 = 0, t3 = 0, uncl = 0;
  double lambda1_min = kInf, lambda1_max = -kInf;
  for (const auto& recs : scan.per_ray) {
    for (const FocalRecord& r : recs) {
      ++records;
      if (r.regular) ++regular;
      switch (r.localform) {
        case LocalForm::T1: ++t1; break;
        case LocalForm::T2: ++t2; break;
        case LocalForm::T3: ++t3; break;
        case LocalForm::Unclassified: ++uncl; break;
      }
    }
  }
  int finite_lambda = 0;
  for (const auto& lam : scan.lambda)
    if (!lam.empty() && std::isfinite(lam[0])) {
      ++finite_lambda;
      lambda1_min = std::min(lambda1_min, lam[0]);
      lambda1_max = std::max(lambda1_max, lam[0]);
    }
  j["rays"] = scenario.grid().size();
  j["records"] = records;
  j["regular_records"] = regular;
  j["localform_counts"] = {{"T1", t1}, {"T2", t2}, {"T3", t3}, {"unclassified", uncl}};
  j["rays_with_finite_lambda1"] = finite_lambda;
  if (finite_lambda > 0) {
    j["lambda1_min"] = lambda1_min;
    j["lambda1_max"] = lambda1_max;
  }
  j["horizon_t_max"] = scenario.t_max();
  return j;
}

Json cut_scan_summary(const Scenario& scenario, const std::vector<CutRecord>& records,
                      double closure_eps, double closure_fraction) {
  Json j = scenario.summary_header("cut-scan");
  int finite = 0, sep = 0, focal = 0, horizon = 0;
  double max_gap = -kInf;
  for (const CutRecord& r : records) {
    if (std::isfinite(r.rho)) ++finite;
    if (r.separating) ++sep;
    if (r.focal) ++focal;
    if (r.horizon) ++horizon;
    if (std::isfinite(r.rho) && std::isfinite(r.lambda1))
      max_gap = std::max(max_gap, r.rho - r.lambda1);
  }
  j["rays"] = scenario.grid().size();
  j["finite_cut_points"] = finite;
  j["separating"] = sep;
  j["focal"] = focal;
  j["horizon"] = horizon;
  j["max_rho_minus_lambda1"] = std::isfinite(max_gap) ? max_gap : 0.0;
  j["closure_eps"] = closure_eps;
  j["closure_fraction"] = closure_fraction;
  j["horizon_t_max"] = scenario.t_max();
  return j;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {

struct SvgCanvas {
  std::ostringstream body;
  double xlo = -2, xhi = 2, ylo = -2, yhi = 2;
  double w = 760, h = 760, margin = 30;

  void fit(double x, double y) {
    xlo = std::min(xlo, x - 0.2);
    xhi = std::max(xhi, x + 0.2);
    ylo = std::min(ylo, y - 0.2);
    yhi = std::max(yhi, y + 0.2);
  }
  double X(double x) const { return margin + (x - xlo) / (xhi - xlo) * (w - 2 * margin); }
  double Y(double y) const { return h - margin - (y - ylo) / (yhi - ylo) * (h - 2 * margin); }

  void polyline(const std::vector<Vec>& pts, const char* color, double width) {
    if (pts.empty()) return;
    body << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
         << "\" points=\"";
    for (const Vec& p : pts) body << format_g17(X(p[0])) << "," << format_g17(Y(p[1])) << " ";
    body << "\"/>\n";
  }
  void dot(const Vec& p, const char* color, double r) {
    body << "<circle cx=\"" << format_g17(X(p[0])) << "\" cy=\"" << format_g17(Y(p[1]))
         << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
  }
};

}  // namespace

std::string render_svg(const Scenario& scenario, const FocalScanResult* focal,
                       const std::vector<CutRecord>* cut) {
  SvgCanvas cv;
  const bool planar = !scenario.system().is_embedded() &&
                      scenario.system().ambient_dim() == 2;

  std::vector<Vec> curve;
  if (planar) {
    const Submanifold& sub = scenario.bundle().submanifold();
    if (sub.param_dim() == 1) {
      for (int i = 0; i <= 512; ++i) {
        double t = sub.param_lo()[0] +
                   (sub.param_hi()[0] - sub.param_lo()[0]) * i / 512.0;
        Vec p = sub.embed(Vec::Constant(1, t));
        cv.fit(p[0], p[1]);
        curve.push_back(p);
      }
    } else if (sub.param_dim() == 0) {
      curve.push_back(sub.embed(Vec(0)));
      cv.fit(curve[0][0], curve[0][1]);
    }
    if (focal)
      for (const auto& recs : focal->per_ray)
        for (const FocalRecord& r : recs) cv.fit(r.image[0], r.image[1]);
    if (cut)
      for (const CutRecord& r : *cut)
        if (std::isfinite(r.rho)) cv.fit(r.image[0], r.image[1]);
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cv.w << "\" height=\""
     << cv.h << "\" viewBox=\"0 0 " << cv.w << " " << cv.h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  os << "<line x1=\"" << cv.X(cv.xlo) << "\" y1=\"" << cv.Y(0) << "\" x2=\"" << cv.X(cv.xhi)
     << "\" y2=\"" << cv.Y(0) << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << cv.X(0) << "\" y1=\"" << cv.Y(cv.ylo) << "\" x2=\"" << cv.X(0)
     << "\" y2=\"" << cv.Y(cv.yhi) << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";

  if (planar) {
    if (curve.size() > 1) cv.polyline(curve, "#1f77b4", 2.0);
    if (curve.size() == 1) cv.dot(curve[0], "#1f77b4", 4.0);
    // sample geodesics: every 30th ray, drawn to its cut or focal time
    const RayGrid& grid = scenario.grid();
    for (int r = 0; r < grid.size(); r += std::max(1, grid.size() / 24)) {
      double tend = scenario.t_max();
      if (cut && std::isfinite((*cut)[static_cast<size_t>(r)].rho))
        tend = (*cut)[static_cast<size_t>(r)].rho;
      else if (focal && !focal->lambda[static_cast<size_t>(r)].empty() &&
               std::isfinite(focal->lambda[static_cast<size_t>(r)][0]))
        tend = focal->lambda[static_cast<size_t>(r)][0];
      UnitNormal u = grid.normal(r);
      GeodesicPath path = integrate_geodesic(scenario.system(), Point{u.p},
                                             Vector{Point{u.p}, u.v}, tend, 1e-8);
      std::vector<Vec> pts;
      for (int i = 0; i <= 48; ++i) pts.push_back(path.position(tend * i / 48.0));
      cv.polyline(pts, "#bbbbbb", 0.8);
    }
    if (focal)
      for (const auto& recs : focal->per_ray)
        for (const FocalRecord& rec : recs) cv.dot(rec.image, "#d62728", 1.6);
    if (cut)
      for (const CutRecord& rec : *cut)
        if (std::isfinite(rec.rho)) cv.dot(rec.image, "#2ca02c", 1.6);
  }
  os << cv.body.str();
  os << "</svg>\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
}

}  // namespace finfocal
