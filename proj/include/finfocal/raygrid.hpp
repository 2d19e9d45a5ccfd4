#pragma once

#include <vector>

#include "finfocal/submanifold.hpp"

namespace finfocal {

// Global grids over S(nu), with a neighbor topology used by classification
// and closure checks.
class RayGrid {
 public:
  enum class Topology { Ring, Sphere2 };

  // codim-one N with 1D parameter: rays = params x sides
  static RayGrid ring(const NormalBundle& bundle, int count, std::vector<int> sides);
  // point N in a surface/chart of manifold dim 2: rays = fiber angles
  static RayGrid point_circle(const NormalBundle& bundle, int count);
  // point N in manifold dim 3: lat x lon fiber grid
  static RayGrid point_sphere(const NormalBundle& bundle, int lat, int lon);

  int size() const { return static_cast<int>(specs_.size()); }
  const NormalBundle& bundle() const { return *bundle_; }
  Topology topology() const { return topology_; }

  UnitNormal normal(int idx) const;
  NormalSphereChart chart_at(int idx) const;
  // indices within `ring` grid steps on the same side
  std::vector<int> neighbors(int idx, int ring) const;
  // chart-coordinate offset of a neighbor relative to idx (same chart axes)
  Vec chart_offset(int idx, int nbr) const;
  double spacing() const { return spacing_; }

  struct Spec {
    Vec params, angles;
    int side = 1;
  };
  const Spec& spec(int idx) const { return specs_[static_cast<size_t>(idx)]; }

 private:
  const NormalBundle* bundle_ = nullptr;
  Topology topology_ = Topology::Ring;
  std::vector<Spec> specs_;
  int block_ = 0;        // rays per side (ring) / per-latitude count (sphere2)
  int lat_ = 0, lon_ = 0;
  bool periodic_ = true;
  double spacing_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
};

}  // namespace finfocal
