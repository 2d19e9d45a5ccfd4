#pragma once

#include <memory>
#include <vector>

#include "finfocal/submanifold.hpp"

namespace finfocal {

// ---------------------------------------------------------------------------
// N-Jacobi initial data and the canonical basis along a unit normal ray:
//   - one radial pair (0, v),
//   - m tangential pairs (e_a, A_v e_a) over a g_v-orthonormal tangent basis,
//   - (n-m-1) fiber pairs (0, w_b) spanning the rest of T_v(S(nu_p)), which is
//     the g_v-orthogonal complement of T_pN.
// ---------------------------------------------------------------------------

struct JacobiPair {
  Vec J0;     // ambient coordinates
  Vec Jdot0;  // covariant derivative at t = 0
};

struct JacobiBasis {
  std::vector<JacobiPair> pairs;  // size n; [0] radial, [1..m] tangential, rest fiber
  int tangent_count = 0;          // m
  int radial_index = 0;
};

JacobiBasis n_jacobi_basis(const NormalBundle& bundle, const UnitNormal& v);

// ---------------------------------------------------------------------------
// RayFrame: one integration per ray carries the geodesic, a parallel
// g-orthonormal frame, and the full fundamental system of the variational
// flow (2n solutions in frame coordinates: P with P(0)=I, P'(0)=0 and Q with
// Q(0)=0, Q'(0)=I). Every N-Jacobi field is a linear combination.
// ---------------------------------------------------------------------------

struct FrameState {
  Vec x, v;
  Mat E;         // ambient x n frame
  Mat dX, dV;    // ambient x 2n coordinate variations
};

class RayFrame {
 public:
  RayFrame(const NormalBundle& bundle, const UnitNormal& direction, double horizon,
           double tol = 1e-10, double hmax = 0.0);

  int n() const { return n_; }
  double horizon() const { return T_; }
  const UnitNormal& direction() const { return dir_; }
  const NormalBundle& bundle() const { return *bundle_; }
  const GeodesicSystem& system() const { return *sys_; }
  const JacobiBasis& basis() const { return basis_; }
  const Mat& A0() const { return A0_; }
  const Mat& B0() const { return B0_; }

  Vec position(double t) const;
  Vec velocity(double t) const;
  Mat frame(double t) const;
  FrameState state(double t) const;

  // fundamental system in frame coordinates
  void fundamental(double t, Mat& P, Mat& Q, Mat& Pp, Mat& Qp) const;

  // d(exp^nu) matrix in the transported frame and its derivative
  Mat D(double t) const;
  Mat Dprime(double t) const;
  double detD(double t) const;

  // synthesized N-Jacobi field for basis coefficients c (ambient output)
  Vec J_at(const Vec& c, double t) const;
  Vec Jdot_at(const Vec& c, double t) const;
  // frame-coordinate version
  Vec J_frame(const Vec& c, double t) const;
  Vec Jdot_frame(const Vec& c, double t) const;

  // natural sample times (integration step boundaries + midpoints)
  std::vector<double> sample_times() const;

  double max_speed_drift() const { return max_drift_; }
  double frame_gram_drift() const;  // max |E^T G E - I| over samples

 private:
  void unpack(const Vec& y, FrameState& st) const;

  const NormalBundle* bundle_;
  const GeodesicSystem* sys_;
  UnitNormal dir_;
  JacobiBasis basis_;
  Mat A0_, B0_;
  Mat E0_;
  int n_ = 0, d_ = 0;
  double T_ = 0.0;
  double max_drift_ = 0.0;
  DensePath path_;
};

// A single N-Jacobi field as a combination over a shared frame.
class NJacobiField {
 public:
  NJacobiField(const RayFrame& frame, Vec coeffs)
      : frame_(&frame), coeffs_(std::move(coeffs)) {}
  // solve for the combination matching the given initial pair
  static NJacobiField from_pair(const RayFrame& frame, const JacobiPair& pair);

  const RayFrame& frame() const { return *frame_; }
  Vec J(double t) const { return frame_->J_at(coeffs_, t); }
  Vec Jdot(double t) const { return frame_->Jdot_at(coeffs_, t); }
  const Vec& coeffs() const { return coeffs_; }

  // zeros on [t0, t1] located from sign structure of |J| (isolated by theory)
  std::vector<double> zeros(double t0, double t1, double tol = 1e-9) const;

 private:
  const RayFrame* frame_;
  Vec coeffs_;
};

// g_{\dot gamma}(J, Kdot) - g_{\dot gamma}(Jdot, K); PathMismatch if frames differ
double adjoint_defect(const NJacobiField& J, const NJacobiField& K, double t);

struct ExpDifferential {
  double t = 0.0;
  Mat D;                  // n x n in the transported frame
  Vec singular_values;    // descending
  Mat kernel;             // basis-coefficient combinations (n x k)
  int rank = 0;
};

ExpDifferential exp_differential(const RayFrame& frame, double t,
                                 double rank_tol = 1e-7);

// Components of a kernel combination in the (s, t) chart of the slit cone
// bundle at t* v: first n-1 entries ride the NormalSphereChart axes, the last
// is radial. Also reports the consistency residual of the conversion.
Vec kernel_chart_components(const RayFrame& frame, const NormalSphereChart& chart,
                            double tstar, const Vec& kernel_coeffs,
                            double* residual = nullptr);

struct SecondOrderCheck {
  Vec fd_value;    // mixed second difference of E along (radial, x)
  Vec jdot_value;  // t* Jdot_x(t*)
  double defect;   // distance between them modulo Im dE
};

SecondOrderCheck second_order_check(const RayFrame& frame, const NormalSphereChart& chart,
                                    double tstar, const Vec& kernel_coeffs, double h);

}  // namespace finfocal
