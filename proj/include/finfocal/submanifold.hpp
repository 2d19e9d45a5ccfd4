#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finfocal/geodesic.hpp"
#include "finfocal/metric.hpp"

namespace finfocal {

// ---------------------------------------------------------------------------
// Closed submanifold N given by a parametric embedding. Components are
// expressions in the parameters x0..x{m-1}, so dI is exact via duals.
// ---------------------------------------------------------------------------

class Submanifold {
 public:
  static Submanifold circle(double radius, const Vec& center);
  static Submanifold ellipse(double a, double b);
  static Submanifold line(const Vec& base, const Vec& dir, double lo, double hi);
  static Submanifold point(const Vec& p);
  // great circle {x2 = 0} on the sphere of the given radius in R^3
  static Submanifold equator(double radius);
  static Submanifold from_expressions(int param_dim, std::vector<Expr> components,
                                      bool periodic, const Vec& lo, const Vec& hi);

  int param_dim() const { return m_; }       // m = dim N
  int ambient_dim() const { return d_; }
  bool periodic() const { return periodic_; }
  const Vec& param_lo() const { return lo_; }
  const Vec& param_hi() const { return hi_; }

  Vec embed(const Vec& params) const;
  // ambient x m Jacobian; throws DegenerateTangent when rank-deficient
  Mat tangent_basis(const Vec& params) const;

 private:
  int m_ = 0, d_ = 0;
  bool periodic_ = true;
  Vec lo_, hi_;
  std::vector<Expr> comps_;
  Vec point_;  // m == 0 case
};

// ---------------------------------------------------------------------------
// Unit normals and charts on the unit normal cone bundle S(nu)
// ---------------------------------------------------------------------------

struct UnitNormal {
  Vec params;   // point on N (size m)
  Vec angles;   // fiber chart angles (size n - m - 1)
  int side = 1; // orientation of the annihilator direction when codim == 1
  Vec p;        // footpoint, ambient coordinates
  Vec v;        // F-unit normal vector, ambient coordinates
};

// Binds (N, geodesic system) and realizes the cone-bundle constructions:
// Legendre-based unit normals, second fundamental form, shape operator.
class NormalBundle {
 public:
  NormalBundle(Submanifold sub, const GeodesicSystem& sys,
               std::optional<Vec> interior_point = std::nullopt);

  const Submanifold& submanifold() const { return sub_; }
  const GeodesicSystem& system() const { return *sys_; }
  int manifold_dim() const { return n_; }  // n = dim M
  int codim() const { return n_ - sub_.param_dim(); }

  // normal chart -> unit normal; angles has size codim-1
  UnitNormal unit_normal(const Vec& params, const Vec& angles, int side) const;
  // from an annihilator covector (projected onto the annihilator if needed)
  UnitNormal unit_normal_from_covector(const Vec& params, const Vec& xi) const;

  // sign s such that side=s points toward the configured interior point
  int inward_side(const Vec& params) const;

  // Pi^n(x, y) for tangent vectors x,y at p = embed(params); n any nonzero
  // normal (not necessarily unit). Output is g_n-perpendicular to T_pN.
  Vec second_fundamental_form(const Vec& params, const Vec& normal, const Vec& x,
                              const Vec& y) const;
  // matrix of A_n in the tangent basis columns of tangent_basis(params)
  Mat shape_operator(const Vec& params, const Vec& normal) const;
  // A_n applied to an ambient tangent vector
  Vec shape_apply(const Vec& params, const Vec& normal, const Vec& x) const;

  // g_n-orthogonal split of an ambient vector at p
  void split_tangent_normal(const Vec& params, const Vec& normal, const Vec& w,
                            Vec& tangential, Vec& perpendicular) const;

  // smooth local frame of the annihilator directions used by the fiber chart;
  // chart backend: covectors; embedded backend: tangent-space directions.
  Mat normal_frame(const Vec& params) const;

 private:
  Vec extension_normal(const Vec& params, const Vec& normal, const Vec& dparams,
                       double s) const;  // the Legendre extension n~ along a param line

  Submanifold sub_;
  const GeodesicSystem* sys_;
  int n_;  // manifold dimension
  std::optional<Vec> interior_;
};

// Chart on S(nu) near a center normal: s in R^{n-1} maps the first m slots to
// base parameters and the rest to fiber angles.
struct NormalSphereChart {
  const NormalBundle* bundle = nullptr;
  UnitNormal center;

  int dim() const { return bundle->manifold_dim() - 1; }
  UnitNormal at(const Vec& s) const;
  // footpoint velocity and scaled-normal velocity along chart axis j (FD)
  void axis_rates(int j, double scale_t, Vec& dfoot, Vec& dnormal, double h = 1e-6) const;
  // norm of the TM-embedded chart tangent, used to normalize angles
  double axis_scale(int j, double scale_t) const;
};

}  // namespace finfocal
