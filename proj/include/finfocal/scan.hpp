#pragma once

#include <vector>

#include "finfocal/cut.hpp"

namespace finfocal {

struct FocalScanSettings {
  double t_max = 5.0;
  int max_focal_index = 2;
  double integrator_tol = 1e-10;
  FocalDetectionOptions detect;
  int threads = 1;
  int neighbor_ring = 3;
  double t2_angle_deg = 2.0;  // kernel-in-plane below this: T2
  double t3_angle_deg = 5.0;  // kernel transverse above this: T3
  bool classify = true;
};

struct FocalScanResult {
  std::vector<std::vector<FocalRecord>> per_ray;   // ordered by time
  std::vector<std::vector<double>> lambda;         // per ray, lambda_1..lambda_J
  std::vector<FocalRecord> flat() const;
};

FocalScanResult focal_scan(const RayGrid& grid, const FocalScanSettings& settings);

// window half-width around a record used by probes: half the gap to the
// nearest other focal time on the same ray
double probe_window(const std::vector<FocalRecord>& ray_records, size_t idx,
                    double t_max);

struct WarnerScanResult {
  std::vector<WarnerReport> reports;  // parallel to records
  bool all_pass(double r1_tol, double sigma_min) const;
};

WarnerScanResult warner_scan(const RayGrid& grid, const FocalScanResult& scan,
                             double probe_radius, double integrator_tol, int threads);

}  // namespace finfocal
