#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "finfocal/jacobi.hpp"

namespace finfocal {

enum class LocalForm { T1, T2, T3, Unclassified };
const char* to_string(LocalForm f);

struct FocalRecord {
  int ray = -1;
  double time = 0.0;
  int multiplicity = 0;   // k
  int order = 0;          // i: accumulated multiplicity before + 1
  bool regular = false;
  bool classified = false;
  LocalForm localform = LocalForm::Unclassified;
  double delta_radial_derivative = 0.0;
  double sigma_ratio = 0.0;    // sigma_min / sigma_max at the focal time
  Vec image;                   // E(time * v)
  Mat kernel_coeffs;           // n x k combinations over the canonical basis
  Vec kernel_chart;            // scaled chart components of the first kernel dir
  Mat kernel_chart_cols;       // all kernel directions in scaled chart coords
  Vec chart_scales;            // per-axis chart scaling used for angles
  double kernel_plane_angle = -1.0;  // degrees, worst over kernel directions;
                                     // <0 when no fit was possible
};

struct FocalDetectionOptions {
  double t_min_fraction = 0.01;  // skip [0, f*T): D(0) is structurally singular
  double time_tol = 1e-9;
  double rank_tol = 1e-7;
  double min_candidate_ratio = 1e-2;  // |det| dip gating for even-order zeros
};

// zeros of det D(t) on (t_min, T_max] with kernel dimensions
std::vector<std::pair<double, int>> detect_focal_times(
    const RayFrame& frame, double t_max, const FocalDetectionOptions& opts = {});

// index of gamma|_[0,T] = sum of multiplicities strictly inside (0, T)
int morse_index(const std::vector<std::pair<double, int>>& focal_times, double T,
                double time_tol = 1e-9);
int morse_index(const RayFrame& frame, double T);

// lambda_j from accumulated multiplicities; +inf when not reached by horizon
double focal_time_j(const std::vector<std::pair<double, int>>& focal_times, int j);

// sign-augmented elementary symmetric polynomial e_{n-k+1} of the singular
// values of D(t); equals det D for k = 1, and 1 for k = n+1 (empty product).
double delta_value(const RayFrame& frame, double t, int k);

struct WarnerReport {
  double r1_norm = 0.0;        // F(dE(radial)) at the focal point
  double r1_expected = 0.0;    // F(v) = t*
  int r2_rank = 0;
  double r2_sigma_ratio = 0.0; // sigma_min/sigma_max of the projected Jdot block
  std::vector<int> r3_counts;  // multiplicity-weighted counts per probe ray
  bool r3_pass = false;
};

WarnerReport warner_checks(const RayFrame& frame, const FocalRecord& record,
                           const NormalSphereChart& chart, double probe_radius,
                           double window);

struct DerivativeReport {
  double fd = 0.0;              // Richardson-extrapolated central difference
  double fd_self_consistency = 0.0;
  // literal shape-operator pairing g_v(v, A_v(dpi(x))) / sqrt(lambda_j);
  // vanishes identically (A_v maps into T_pN, g_v-orthogonal to v) and is
  // reported next to fd, never asserted equal
  double shape_pairing = 0.0;
  double discrepancy = 0.0;     // |fd - shape_pairing|
};

// derivative of lambda_j along chart axis direction x (unit chart speed)
DerivativeReport focal_derivative(const NormalBundle& bundle, const UnitNormal& v,
                                  int j, const Vec& chart_dir, double t_max,
                                  double h = 1e-3, double tol = 1e-10);

struct WitnessPair {
  UnitNormal u1, u2;
  double t1 = 0.0, t2 = 0.0;
  double image_distance = 0.0;
  double preimage_separation = 0.0;  // cone-bundle (TM-embedded) distance
};

// non-injectivity witness near a focal record; WitnessNotFound on failure
WitnessPair non_injectivity_witness(const RayFrame& frame, const FocalRecord& record,
                                    const NormalSphereChart& chart, double eps,
                                    double delta, double tol = 1e-10);

}  // namespace finfocal
