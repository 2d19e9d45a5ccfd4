#pragma once

#include <optional>
#include <vector>

#include "finfocal/focal.hpp"
#include "finfocal/raygrid.hpp"

namespace finfocal {

struct Foot {
  UnitNormal direction;
  double time = 0.0;
  double residual = 0.0;  // |E(t u) - q|
};

struct DistanceResult {
  double distance = 0.0;
  std::vector<Foot> feet;  // minimizers within the tolerance band
};

enum class CutReason { Separating, Focal, Horizon };
const char* to_string(CutReason r);

struct CutRecord {
  int ray = -1;
  UnitNormal direction;
  double rho = kInf;
  double lambda1 = kInf;
  CutReason reason = CutReason::Horizon;  // separating takes precedence
  bool separating = false, focal = false, horizon = false;
  std::optional<Foot> witness;
  Vec image;  // E(rho v) when rho is finite
};

struct CutSettings {
  double t_max = 5.0;
  double predicate_tol = 2.5e-4;  // slack in d(N, E(t v)) >= t - tol
  double bisect_tol = 1e-4;
  double report_tol = 1e-3;       // focal/separating tagging tolerance
  int samples_per_ray = 512;
  double integrator_tol = 1e-10;
  int starts = 64;                // multi-start rays for distance queries
  double witness_image_tol = 1e-6;
  double witness_delta = 0.0;     // 0: 1.5x local ray spacing
  // concatenation legs longer than this are not trusted as arrival bounds
  // (chord vs geodesic error grows cubically on curved backends)
  double max_leg = 0.15;
  int threads = 1;
};

// Shared wavefront atlas over a ray grid: per-ray dense samples of the normal
// exponential plus first focal times. Distance predicates ride on it; exact
// answers are Gauss-Newton refined with fresh integrations.
class CutAnalyzer {
 public:
  CutAnalyzer(const RayGrid& grid, const CutSettings& settings);

  const RayGrid& grid() const { return *grid_; }
  const CutSettings& settings() const { return settings_; }
  double lambda1(int ray) const { return lambda1_[static_cast<size_t>(ray)]; }

  // interpolated E(t u_ray) from the atlas samples
  Vec ray_position(int ray, double t) const;

  // smallest concatenation upper bound  min_j min_t [t + F(E(t u_j), q - ...)]
  double arrival_estimate(const Vec& q, int* best_ray = nullptr,
                          double* best_t = nullptr) const;

  // exact d(N, q) for position-independent chart metrics, where minimizers
  // are straight segments: min_p F(p, q - p) over N with a 1D param refine
  double flat_distance(const Vec& q) const;
  bool flat_exact() const { return flat_exact_; }

  // multi-start shooting distance with GN-refined feet
  DistanceResult distance_to_point(const Vec& q) const;

  CutRecord cut_time(int ray) const;
  std::vector<CutRecord> scan() const;

  std::optional<Foot> separating_witness(int ray, double rho, double time_tol,
                                         double image_tol) const;

  // fraction of finite tangent cut points within eps of a separating one
  static double closure_fraction(const std::vector<CutRecord>& records, double eps);
  static double max_rho_minus_lambda(const std::vector<CutRecord>& records);
  // median cone-bundle distance between neighboring tangent cut points
  static double cut_grid_spacing(const std::vector<CutRecord>& records,
                                 const RayGrid& grid);

 private:
  struct Refined {
    bool ok = false;
    double t = 0.0, residual = kInf;
    Vec chart_s;
    UnitNormal u;
  };
  Refined refine_foot(int ray, double t_seed, const Vec& q, double residual_target) const;

  const RayGrid* grid_;
  CutSettings settings_;
  double dt_ = 0.0;
  bool flat_exact_ = false;
  std::vector<Mat> samples_;    // per ray: d x (S+1) positions
  std::vector<double> lambda1_;
  Mat n_samples_;               // dense N sampling for the flat-exact distance
  Vec n_params_;
};

// T3 (fold) tangent focal points can never be tangent cut points. Numerically
// the gap rho < lambda_1 closes toward the cusp ends of a fold arc, so records
// whose gap sits under the cut resolution AND whose neighborhood leaves the
// fold arc are flagged rather than asserted. A coincidence (contract: zero) is
// an arc-interior T3 record whose cut time matches its focal time.
struct T3CutReport {
  int t3_records = 0;
  int clear = 0;          // rho < focal time - tol
  int flagged = 0;        // sub-resolution records at fold-arc boundaries
  int coincidences = 0;   // contract: zero
  std::vector<int> flagged_rays;
  std::vector<int> violating_rays;
};

struct FocalScanResultRef {
  const std::vector<std::vector<FocalRecord>>* per_ray;
  const RayGrid* grid;
};

T3CutReport t3_not_cut_check(const FocalScanResultRef& focal,
                             const std::vector<CutRecord>& cut, double tol);

}  // namespace finfocal
