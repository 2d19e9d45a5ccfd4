#include <doctest.h>

#include <cmath>

#include "finfocal/oracle.hpp"
#include "finfocal/scan.hpp"

using namespace finfocal;

namespace {

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

struct Fixtures {
  GeodesicSystem euclid = GeodesicSystem::chart(MetricModel::euclidean(2));
  GeodesicSystem sphere = GeodesicSystem::embedded(LevelSurface::sphere(3, 1.0));
};

double ellipse_lambda1(double th, double a, double b) {
  double w2 = a * a * std::sin(th) * std::sin(th) + b * b * std::cos(th) * std::cos(th);
  return std::pow(w2, 1.5) / (a * b);
}

}  // namespace

TEST_SUITE("focal") {
  TEST_CASE("circle: single focal time at the center, multiplicity 1") {
    Fixtures F;
    NormalBundle bundle(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    Vec params = Vec::Constant(1, 0.35);
    UnitNormal v = bundle.unit_normal(params, Vec(0), bundle.inward_side(params));
    RayFrame frame(bundle, v, 3.0);
    auto times = detect_focal_times(frame, 3.0);
    REQUIRE(times.size() == 1);
    CHECK(times[0].first == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(times[0].second == 1);
    CHECK(focal_time_j(times, 1) == doctest::Approx(1.0));
    CHECK(std::isinf(focal_time_j(times, 2)));
  }

  TEST_CASE("sphere equator: pi/2 and 3pi/2, each multiplicity 1") {
    Fixtures F;
    NormalBundle bundle(Submanifold::equator(1.0), F.sphere, std::nullopt);
    UnitNormal v = bundle.unit_normal(Vec(Vec::Constant(1, 1.2)), Vec(0), -1);
    RayFrame frame(bundle, v, 5.2);
    auto times = detect_focal_times(frame, 5.2);
    REQUIRE(times.size() == 2);
    CHECK(std::abs(times[0].first - M_PI / 2) < 1e-7);
    CHECK(std::abs(times[1].first - 3 * M_PI / 2) < 1e-7);
    CHECK(times[0].second == 1);
    CHECK(times[1].second == 1);
  }

  TEST_CASE("line: no focal points up to any horizon") {
    Fixtures F;
    NormalBundle bundle(Submanifold::line(vec2(0, 0), vec2(1, 0), -4, 4), F.euclid,
                        std::nullopt);
    UnitNormal v = bundle.unit_normal(Vec(Vec::Constant(1, 0.5)), Vec(0), 1);
    RayFrame frame(bundle, v, 8.0);
    CHECK(detect_focal_times(frame, 8.0).empty());
  }

  TEST_CASE("morse index: sums multiplicities, endpoint guard") {
    Fixtures F;
    NormalBundle point(Submanifold::point(vec3(0, 0, 1)), F.sphere, std::nullopt);
    UnitNormal v = point.unit_normal(Vec(0), Vec::Constant(1, 0.4), 1);
    RayFrame frame(point, v, 5.2);
    auto times = detect_focal_times(frame, 5.2);
    CHECK(morse_index(times, 3 * M_PI / 2) == 1);  // conjugate point at pi
    CHECK(morse_index(times, 0.5) == 0);
    CHECK_THROWS_AS(morse_index(times, times[0].first), EndpointIsFocal);

    // ellipse a=2, b=1 at theta = 0: lambda_1 = 1/2, so index(1) = 1
    NormalBundle ell(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal u = ell.unit_normal(params, Vec(0), ell.inward_side(params));
    RayFrame ef(ell, u, 3.0);
    auto et = detect_focal_times(ef, 3.0);
    CHECK(focal_time_j(et, 1) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(morse_index(et, 1.0) == 1);
  }

  TEST_CASE("ellipse lambda_1 matches the curvature-radius formula") {
    Fixtures F;
    NormalBundle ell(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    for (double th : {0.3, M_PI / 4, 1.2, 2.0}) {
      Vec params = Vec::Constant(1, th);
      UnitNormal u = ell.unit_normal(params, Vec(0), ell.inward_side(params));
      RayFrame frame(ell, u, 4.6);
      auto times = detect_focal_times(frame, 4.6);
      CHECK(std::abs(focal_time_j(times, 1) - ellipse_lambda1(th, 2.0, 1.0)) <=
            1e-5 * ellipse_lambda1(th, 2.0, 1.0));
    }
  }

  TEST_CASE("delta: det for k=1, zero at the focal time, radial slope, conventions") {
    Fixtures F;
    NormalBundle bundle(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    Vec params = Vec::Constant(1, 2.0);
    UnitNormal v = bundle.unit_normal(params, Vec(0), bundle.inward_side(params));
    RayFrame frame(bundle, v, 3.0);
    CHECK(std::abs(delta_value(frame, 0.4, 1)) > 0.0);
    CHECK(std::abs(delta_value(frame, 1.0, 1)) < 1e-8);
    double h = 1e-5;
    double slope = (delta_value(frame, 1.0 + h, 1) - delta_value(frame, 1.0 - h, 1)) / (2 * h);
    CHECK(std::abs(slope) > 0.1);
    CHECK(delta_value(frame, 0.7, 1) == doctest::Approx(frame.detD(0.7)).epsilon(1e-9));
    // empty product convention above the dimension
    CHECK(delta_value(frame, 0.7, frame.n() + 1) == 1.0);
  }

  TEST_CASE("warner R1-R3 on the circle") {
    Fixtures F;
    NormalBundle bundle(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    RayGrid grid = RayGrid::ring(bundle, 64, {bundle.inward_side(Vec(Vec::Zero(1)))});
    FocalScanSettings fs;
    fs.t_max = 3.0;
    fs.threads = 2;
    FocalScanResult scan = focal_scan(grid, fs);
    REQUIRE(scan.per_ray[0].size() == 1);
    const FocalRecord& rec = scan.per_ray[0][0];
    UnitNormal v = grid.normal(0);
    RayFrame frame(bundle, v, 3.0);
    WarnerReport rep = warner_checks(frame, rec, grid.chart_at(0), 2.0 * grid.spacing(),
                                     probe_window(scan.per_ray[0], 0, 3.0));
    CHECK(std::abs(rep.r1_norm - rep.r1_expected) < 1e-8);
    CHECK(rep.r1_expected == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.r2_rank == 1);
    CHECK(rep.r2_sigma_ratio >= 1e-6);
    CHECK(rep.r3_pass);
    for (int c : rep.r3_counts) CHECK(c == 1);
  }

  TEST_CASE("classification: circle is regular T2 everywhere") {
    Fixtures F;
    NormalBundle bundle(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    RayGrid grid = RayGrid::ring(bundle, 96, {bundle.inward_side(Vec(Vec::Zero(1)))});
    FocalScanSettings fs;
    fs.t_max = 3.0;
    fs.threads = 2;
    FocalScanResult scan = focal_scan(grid, fs);
    for (const auto& recs : scan.per_ray) {
      REQUIRE(recs.size() == 1);
      CHECK(recs[0].regular);
      CHECK(recs[0].localform == LocalForm::T2);
      CHECK((recs[0].image - vec2(0, 0)).norm() < 1e-6);
    }
  }

  TEST_CASE("classification: ellipse fold at pi/4 is T3; cusp direction recorded") {
    Fixtures F;
    NormalBundle bundle(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    RayGrid grid = RayGrid::ring(bundle, 256, {bundle.inward_side(Vec(Vec::Zero(1)))});
    FocalScanSettings fs;
    fs.t_max = 4.6;
    fs.threads = 2;
    FocalScanResult scan = focal_scan(grid, fs);
    int idx_pi4 = 32;  // 256 rays over 2pi: pi/4 is ray 32
    REQUIRE(!scan.per_ray[static_cast<size_t>(idx_pi4)].empty());
    const FocalRecord& fold = scan.per_ray[static_cast<size_t>(idx_pi4)][0];
    CHECK(fold.regular);
    CHECK(fold.multiplicity == 1);
    CHECK(fold.localform == LocalForm::T3);
    // evolute image
    double c3 = std::pow(std::cos(M_PI / 4), 3), s3 = std::pow(std::sin(M_PI / 4), 3);
    CHECK((fold.image - vec2(1.5 * c3, -3.0 * s3)).norm() < 1e-5);
    // the cusp direction theta = 0: recorded as T2 or unclassified, not asserted
    const FocalRecord& cusp = scan.per_ray[0][0];
    CHECK(cusp.localform != LocalForm::T3);
    // type is constant along the regular arc between cusps
    for (int r = 8; r < 56; ++r) {
      const FocalRecord& rec = scan.per_ray[static_cast<size_t>(r)][0];
      CHECK(rec.multiplicity == 1);
      CHECK(rec.order == 1);
      CHECK(rec.localform == LocalForm::T3);
    }
  }

  TEST_CASE("multiplicity k = n-1 = 2 on the 3-sphere point source classifies T1") {
    GeodesicSystem s3 = GeodesicSystem::embedded(LevelSurface::sphere(4, 1.0));
    Vec pole(4);
    pole << 0, 0, 0, 1;
    NormalBundle bundle(Submanifold::point(pole), s3, std::nullopt);
    RayGrid grid = RayGrid::point_sphere(bundle, 8, 16);
    FocalScanSettings fs;
    fs.t_max = 4.2;
    fs.threads = 2;
    FocalScanResult scan = focal_scan(grid, fs);
    int checked = 0;
    for (const auto& recs : scan.per_ray) {
      REQUIRE(recs.size() == 1);
      CHECK(recs[0].multiplicity == 2);
      CHECK(std::abs(recs[0].time - M_PI) < 1e-7);
      CHECK(recs[0].localform == LocalForm::T1);
      // both kernel directions lie inside the fitted focal tangent plane
      CHECK(recs[0].kernel_plane_angle >= 0.0);
      CHECK(recs[0].kernel_plane_angle < 2.0);
      if (recs[0].regular) ++checked;
    }
    CHECK(checked == grid.size());
  }

  TEST_CASE("focal derivative: circle flat, ellipse matches the analytic slope") {
    Fixtures F;
    NormalBundle circ(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    Vec params = Vec::Constant(1, 0.8);
    UnitNormal v = circ.unit_normal(params, Vec(0), circ.inward_side(params));
    DerivativeReport rep = focal_derivative(circ, v, 1, Vec(Vec::Unit(1, 0)), 3.0);
    CHECK(std::abs(rep.fd) < 1e-6);
    CHECK(std::abs(rep.shape_pairing) < 1e-9);

    NormalBundle ell(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    Vec p4 = Vec::Constant(1, M_PI / 4);
    UnitNormal u = ell.unit_normal(p4, Vec(0), ell.inward_side(p4));
    DerivativeReport er = focal_derivative(ell, u, 1, Vec(Vec::Unit(1, 0)), 4.6);
    double analytic = 2.25 * std::sqrt(2.5);  // d/dth (1+3 sin^2)^{3/2}/2 at pi/4
    CHECK(std::abs(er.fd - analytic) <= 1e-4);
    CHECK(er.fd_self_consistency <= 1e-4);
    // the literal pairing evaluates to ~0 (its numerator is g_v(v, T_pN))
    CHECK(std::abs(er.shape_pairing) < 1e-6);
    CHECK(er.discrepancy > 1.0);  // the recorded open question, reported not asserted
  }

  TEST_CASE("non-injectivity witness: circle and ellipse fold") {
    Fixtures F;
    NormalBundle circ(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
    RayGrid cgrid = RayGrid::ring(circ, 64, {circ.inward_side(Vec(Vec::Zero(1)))});
    FocalScanSettings fs;
    fs.t_max = 3.0;
    FocalScanResult cscan = focal_scan(cgrid, fs);
    {
      const FocalRecord& rec = cscan.per_ray[5][0];
      RayFrame frame(circ, cgrid.normal(5), 3.0);
      WitnessPair w = non_injectivity_witness(frame, rec, cgrid.chart_at(5),
                                              6.0 * cgrid.spacing(), 1e-3);
      CHECK(w.image_distance <= 1e-6);
      CHECK(w.preimage_separation >= 1e-3);
    }
    NormalBundle ell(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    RayGrid egrid = RayGrid::ring(ell, 256, {ell.inward_side(Vec(Vec::Zero(1)))});
    FocalScanSettings efs;
    efs.t_max = 4.6;
    FocalScanResult escan = focal_scan(egrid, efs);
    {
      int r = 32;  // pi/4 fold
      const FocalRecord& rec = escan.per_ray[static_cast<size_t>(r)][0];
      RayFrame frame(ell, egrid.normal(r), 4.6);
      WitnessPair w = non_injectivity_witness(frame, rec, egrid.chart_at(r),
                                              6.0 * egrid.spacing(), 1e-3);
      CHECK(w.image_distance <= 1e-6);
      CHECK(w.preimage_separation >= 1e-3);
    }
  }

  TEST_CASE("focal-time continuity: no jumps across neighboring rays") {
    // max neighbor difference below 10x the median difference, with a noise
    // floor for scenarios where lambda_1 is constant
    Fixtures F;
    auto no_jumps = [](const RayGrid& grid, const FocalScanResult& scan) {
      std::vector<double> diffs;
      for (int r = 0; r < grid.size(); ++r) {
        const auto& la = scan.lambda[static_cast<size_t>(r)];
        if (la.empty() || !std::isfinite(la[0])) continue;
        for (int nb : grid.neighbors(r, 1)) {
          const auto& lb = scan.lambda[static_cast<size_t>(nb)];
          if (lb.empty() || !std::isfinite(lb[0])) continue;
          diffs.push_back(std::abs(la[0] - lb[0]));
        }
      }
      REQUIRE(!diffs.empty());
      std::sort(diffs.begin(), diffs.end());
      double median = diffs[diffs.size() / 2];
      double mx = diffs.back();
      return mx < std::max(10.0 * median, 1e-6);
    };
    {
      NormalBundle bundle(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
      RayGrid grid = RayGrid::ring(bundle, 180, {bundle.inward_side(Vec(Vec::Zero(1)))});
      FocalScanSettings fs;
      fs.t_max = 4.6;
      fs.threads = 2;
      fs.classify = false;
      CHECK(no_jumps(grid, focal_scan(grid, fs)));
    }
    {
      NormalBundle bundle(Submanifold::circle(1.0, vec2(0, 0)), F.euclid, vec2(0, 0));
      RayGrid grid = RayGrid::ring(bundle, 96, {bundle.inward_side(Vec(Vec::Zero(1)))});
      FocalScanSettings fs;
      fs.t_max = 3.0;
      fs.threads = 2;
      fs.classify = false;
      CHECK(no_jumps(grid, focal_scan(grid, fs)));
    }
    {
      NormalBundle bundle(Submanifold::equator(1.0), F.sphere, std::nullopt);
      RayGrid grid = RayGrid::ring(bundle, 64, {1, -1});
      FocalScanSettings fs;
      fs.t_max = 5.2;
      fs.threads = 2;
      fs.classify = false;
      CHECK(no_jumps(grid, focal_scan(grid, fs)));
    }
  }

  TEST_CASE("index local constancy near a non-focal endpoint") {
    Fixtures F;
    NormalBundle ell(Submanifold::ellipse(2.0, 1.0), F.euclid, vec2(0, 0));
    Vec params = Vec::Constant(1, 0.9);
    UnitNormal v = ell.unit_normal(params, Vec(0), ell.inward_side(params));
    NormalSphereChart chart{&ell, v};
    RayFrame center(ell, v, 4.6);
    int base = morse_index(detect_focal_times(center, 4.6), 2.2);
    for (int k = 0; k < 8; ++k) {
      Vec s = Vec::Constant(1, 1e-3 * (k - 3.5));
      RayFrame probe(ell, chart.at(s), 4.6);
      CHECK(morse_index(detect_focal_times(probe, 4.6), 2.2) == base);
    }
  }
}
