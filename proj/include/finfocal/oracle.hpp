#pragma once

#include <vector>

#include "finfocal/jacobi.hpp"

namespace finfocal {

// ---------------------------------------------------------------------------
// Independent brute-force distance reference: Dijkstra on a directed lattice
// with Finsler edge weights F(midpoint, step). Edges use all coprime offsets
// up to a stencil radius; source and target get exact local corrections so
// the dominant error is the angular quantization of the stencil.
// ---------------------------------------------------------------------------

struct GridOracleSettings {
  Vec box_lo, box_hi;   // 2D box
  int resolution = 600; // nodes per axis
  int stencil_radius = 14;
};

class GridGraphOracle {
 public:
  GridGraphOracle(const MetricModel& metric, const GridOracleSettings& settings);

  // multi-source run from a sampled source set (positions with head starts)
  void run(const std::vector<std::pair<Vec, double>>& sources);
  // convenience: source = submanifold sampled at `samples` params
  void run_from_submanifold(const Submanifold& sub, int samples = 8192);
  void run_from_point(const Vec& p);

  // distance to q with the last-mile correction; OutOfBox outside the box
  double distance(const Vec& q) const;

  int node_count() const { return res_ * res_; }

 private:
  int index(int i, int j) const { return i * res_ + j; }
  Vec node_pos(int i, int j) const;
  bool inside(const Vec& q) const;

  const MetricModel* metric_;
  GridOracleSettings settings_;
  int res_;
  double hx_, hy_;
  std::vector<std::pair<int, int>> stencil_;
  std::vector<double> dist_;
  std::vector<std::pair<Vec, double>> sources_;
};

// ---------------------------------------------------------------------------
// Discretized index form: hat functions x parallel frame directions plus
// boundary-adapted fields with X(0) in T_pN. The curvature operator along the
// ray comes from the variational flow (finite difference of the exactly
// evaluable covariant rates of the fundamental system), never from an
// explicitly assembled curvature tensor.
// ---------------------------------------------------------------------------

struct IndexFormMatrix {
  Mat matrix;      // symmetric
  int mesh = 0;
  int boundary_fields = 0;
};

IndexFormMatrix assemble_index_form(const RayFrame& frame, double T, int mesh);

// number of negative eigenvalues; MeshTooCoarse when an eigenvalue sits under
// the resolution band
int index_form_negative_count(const RayFrame& frame, double T, int mesh,
                              double zero_band = 1e-9);

// curvature operator matrix M(t) in frame coordinates (J'' = M J)
Mat curvature_operator(const RayFrame& frame, double t, double fd_step = 1e-3);

}  // namespace finfocal
