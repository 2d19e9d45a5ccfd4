#include "finfocal/raygrid.hpp"

#include <cmath>

namespace finfocal {

RayGrid RayGrid::ring(const NormalBundle& bundle, int count, std::vector<int> sides) {
  if (bundle.codim() != 1) throw ConfigError("ring grid needs codim-one N");
  const Submanifold& sub = bundle.submanifold();
  RayGrid g;
  g.bundle_ = &bundle;
  g.topology_ = Topology::Ring;
  g.block_ = count;
  g.periodic_ = sub.periodic();
  g.lo_ = sub.param_lo()[0];
  g.hi_ = sub.param_hi()[0];
  double span = g.hi_ - g.lo_;
  g.spacing_ = g.periodic_ ? span / count : span / (count + 1);
  for (int side : sides) {
    for (int i = 0; i < count; ++i) {
      Spec s;
      s.params = Vec::Constant(1, g.periodic_ ? g.lo_ + i * g.spacing_
                                              : g.lo_ + (i + 1) * g.spacing_);
      s.angles = Vec(0);
      s.side = side;
      g.specs_.push_back(std::move(s));
    }
  }
  return g;
}

RayGrid RayGrid::point_circle(const NormalBundle& bundle, int count) {
  if (bundle.submanifold().param_dim() != 0 || bundle.manifold_dim() != 2)
    throw ConfigError("point_circle grid needs a point N in a 2-manifold");
  RayGrid g;
  g.bundle_ = &bundle;
  g.topology_ = Topology::Ring;
  g.block_ = count;
  g.periodic_ = true;
  g.lo_ = 0.0;
  g.hi_ = 2.0 * M_PI;
  g.spacing_ = 2.0 * M_PI / count;
  for (int i = 0; i < count; ++i) {
    Spec s;
    s.params = Vec(0);
    s.angles = Vec::Constant(1, i * g.spacing_);
    s.side = 1;
    g.specs_.push_back(std::move(s));
  }
  return g;
}

RayGrid RayGrid::point_sphere(const NormalBundle& bundle, int lat, int lon) {
  if (bundle.submanifold().param_dim() != 0 || bundle.manifold_dim() != 3)
    throw ConfigError("point_sphere grid needs a point N in a 3-manifold");
  RayGrid g;
  g.bundle_ = &bundle;
  g.topology_ = Topology::Sphere2;
  g.lat_ = lat;
  g.lon_ = lon;
  g.periodic_ = true;
  g.spacing_ = std::max(M_PI / (lat + 1), 2.0 * M_PI / lon);
  for (int i = 0; i < lat; ++i) {
    double a = M_PI * (i + 1) / (lat + 1);  // keep away from the chart poles
    for (int j = 0; j < lon; ++j) {
      Spec s;
      s.params = Vec(0);
      s.angles = Vec(2);
      s.angles[0] = a;
      s.angles[1] = 2.0 * M_PI * j / lon;
      s.side = 1;
      g.specs_.push_back(std::move(s));
    }
  }
  return g;
}

UnitNormal RayGrid::normal(int idx) const {
  const Spec& s = specs_[static_cast<size_t>(idx)];
  return bundle_->unit_normal(s.params, s.angles, s.side);
}

NormalSphereChart RayGrid::chart_at(int idx) const {
  return NormalSphereChart{bundle_, normal(idx)};
}

std::vector<int> RayGrid::neighbors(int idx, int ring) const {
  std::vector<int> out;
  if (topology_ == Topology::Ring) {
    int side_block = idx / block_;
    int i = idx % block_;
    for (int d = -ring; d <= ring; ++d) {
      if (d == 0) continue;
      int j = i + d;
      if (periodic_) {
        j = ((j % block_) + block_) % block_;
      } else if (j < 0 || j >= block_) {
        continue;
      }
      out.push_back(side_block * block_ + j);
    }
    return out;
  }
  int i = idx / lon_, j = idx % lon_;
  for (int di = -ring; di <= ring; ++di) {
    for (int dj = -ring; dj <= ring; ++dj) {
      if (di == 0 && dj == 0) continue;
      int ii = i + di;
      if (ii < 0 || ii >= lat_) continue;
      int jj = ((j + dj) % lon_ + lon_) % lon_;
      out.push_back(ii * lon_ + jj);
    }
  }
  return out;
}

Vec RayGrid::chart_offset(int idx, int nbr) const {
  const Spec& a = specs_[static_cast<size_t>(idx)];
  const Spec& b = specs_[static_cast<size_t>(nbr)];
  const int m = static_cast<int>(a.params.size());
  const int q = static_cast<int>(a.angles.size());
  Vec off(m + q);
  for (int i = 0; i < m; ++i) {
    double d = b.params[i] - a.params[i];
    if (periodic_) {
      double span = hi_ - lo_;
      while (d > 0.5 * span) d -= span;
      while (d < -0.5 * span) d += span;
    }
    off[i] = d;
  }
  for (int i = 0; i < q; ++i) {
    double d = b.angles[i] - a.angles[i];
    while (d > M_PI) d -= 2.0 * M_PI;
    while (d < -M_PI) d += 2.0 * M_PI;
    off[m + i] = d;
  }
  return off;
}

}  // namespace finfocal
