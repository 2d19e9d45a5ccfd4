#include <doctest.h>

#include <cmath>
#include <random>

#include "finfocal/jacobi.hpp"

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

struct CircleSetup {
  GeodesicSystem sys = GeodesicSystem::chart(MetricModel::euclidean(2));
  NormalBundle bundle{Submanifold::circle(1.0, Vec(Vec::Zero(2))), sys, Vec(Vec::Zero(2))};
};

struct SphereEquatorSetup {
  GeodesicSystem sys = GeodesicSystem::embedded(LevelSurface::sphere(3, 1.0));
  NormalBundle bundle{Submanifold::equator(1.0), sys, std::nullopt};
};

struct SpherePointSetup {
  GeodesicSystem sys = GeodesicSystem::embedded(LevelSurface::sphere(3, 1.0));
  NormalBundle bundle{Submanifold::point(vec3(0, 0, 1)), sys, std::nullopt};
};

}  // namespace

TEST_SUITE("jacobi") {
  TEST_CASE("basis shape: plane curve gives tangential + radial pairs") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.3);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    JacobiBasis basis = n_jacobi_basis(S.bundle, v);
    CHECK(basis.pairs.size() == 2);
    CHECK(basis.tangent_count == 1);
    // radial pair (0, v)
    CHECK(basis.pairs[0].J0.norm() == 0.0);
    CHECK((basis.pairs[0].Jdot0 - v.v).norm() < 1e-12);
    // tangential pair: J(0) in T_pN, Jdot(0) = A_v J(0) tangential
    Mat tau = S.bundle.submanifold().tangent_basis(params);
    Vec t_hat = tau.col(0).normalized();
    CHECK(std::abs(std::abs(basis.pairs[1].J0.dot(t_hat)) - 1.0) < 1e-10);
    CHECK((basis.pairs[1].Jdot0 + basis.pairs[1].J0).norm() < 1e-7);  // A = -1
  }

  TEST_CASE("radial pair integrates to J(t) = t gamma_dot(t)") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 1.1);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    RayFrame frame(S.bundle, v, 2.5);
    Vec c = Vec::Unit(2, frame.basis().radial_index);
    for (double t : {0.2, 0.9, 1.7, 2.4}) {
      CHECK((frame.J_at(c, t) - t * frame.velocity(t)).norm() < 1e-9);
      CHECK((frame.Jdot_at(c, t) - frame.velocity(t)).norm() < 1e-9);
    }
  }

  TEST_CASE("circle tangential field is (1 - t) e(t) in the transported frame") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    RayFrame frame(S.bundle, v, 2.5);
    Vec c = Vec::Unit(2, 1);  // tangential basis pair
    for (double t : {0.3, 0.99999999, 1.6}) {
      Vec jf = frame.J_frame(c, t);
      // frame order: [radial, tangent]; tangential stays in slot 1
      CHECK(std::abs(jf[0]) < 1e-9);
      CHECK(jf[1] == doctest::Approx(1.0 - t).epsilon(1e-8));
    }
  }

  TEST_CASE("sphere equator: tangential field cos(t), zeros at pi/2 and 3pi/2") {
    SphereEquatorSetup S;
    Vec params = Vec::Constant(1, 0.7);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), 1);
    RayFrame frame(S.bundle, v, 5.2);
    Vec c = Vec::Unit(2, 1);
    for (double t : {0.4, 1.2, 2.8, 4.4}) {
      Vec jf = frame.J_frame(c, t);
      CHECK(jf[1] == doctest::Approx(std::cos(t)).epsilon(1e-7));
      CHECK(std::abs(jf[0]) < 1e-7);
    }
    NJacobiField field(frame, c);
    auto zs = field.zeros(0.2, 5.2);
    REQUIRE(zs.size() == 2);
    CHECK(zs[0] == doctest::Approx(M_PI / 2).epsilon(1e-7));
    CHECK(zs[1] == doctest::Approx(3 * M_PI / 2).epsilon(1e-7));
  }

  TEST_CASE("sphere point source: fiber field sin(t), zero at pi") {
    SpherePointSetup S;
    UnitNormal v = S.bundle.unit_normal(Vec(0), Vec::Constant(1, 0.9), 1);
    RayFrame frame(S.bundle, v, 4.5);
    Vec c = Vec::Unit(2, 1);  // the non-radial fiber pair (m = 0)
    for (double t : {0.5, 1.5, 2.9}) {
      Vec jf = frame.J_frame(c, t);
      CHECK(jf[1] == doctest::Approx(std::sin(t)).epsilon(1e-7));
    }
    NJacobiField field(frame, c);
    auto zs = field.zeros(0.2, 4.4);
    REQUIRE(zs.size() == 1);
    CHECK(zs[0] == doctest::Approx(M_PI).epsilon(1e-7));
  }

  TEST_CASE("euclidean line: tangential field never vanishes") {
    GeodesicSystem sys = GeodesicSystem::chart(MetricModel::euclidean(2));
    NormalBundle bundle(Submanifold::line(vec2(0, 0), vec2(1, 0), -3, 3), sys,
                        std::nullopt);
    UnitNormal v = bundle.unit_normal(Vec(Vec::Zero(1)), Vec(0), 1);
    RayFrame frame(bundle, v, 6.0);
    NJacobiField field(frame, Vec(Vec::Unit(2, 1)));
    CHECK(field.zeros(0.05, 6.0).empty());
    for (double t : {1.0, 3.0, 5.5}) CHECK(field.J(t).norm() == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("initial conditions satisfy the N-Jacobi constraints") {
    SphereEquatorSetup S;
    Vec params = Vec::Constant(1, 2.2);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), -1);
    JacobiBasis basis = n_jacobi_basis(S.bundle, v);
    Mat g = S.sys.metric_tensor(v.p, v.v);
    Mat tau = S.bundle.submanifold().tangent_basis(params);
    for (const JacobiPair& pr : basis.pairs) {
      // J(0) tangent to N (or zero)
      if (pr.J0.norm() > 0) {
        Vec resid = pr.J0 - tau * (tau.transpose() * tau).ldlt().solve(
                                  Vec(tau.transpose() * pr.J0));
        CHECK(resid.norm() < 1e-10);
      }
      // Jdot(0) - A(J(0)) is g_v-perpendicular to T_pN
      Vec gap = pr.Jdot0 - S.bundle.shape_apply(params, v.v, pr.J0);
      CHECK(std::abs(gap.dot(g * tau.col(0))) < 1e-9 * std::max(1.0, gap.norm()));
    }
  }

  TEST_CASE("adjoint identity: J = K gives exactly zero, pairs stay below 1e-7") {
    SphereEquatorSetup S;
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), 1);
    RayFrame frame(S.bundle, v, 5.0);
    NJacobiField a(frame, vec2(1.0, 0.0)), b(frame, vec2(0.3, -0.8));
    CHECK(adjoint_defect(a, a, 1.7) == 0.0);
    for (int i = 1; i <= 50; ++i) {
      double t = 5.0 * i / 51.0;
      double scale = std::max({a.J(t).norm() * b.Jdot(t).norm(),
                               a.Jdot(t).norm() * b.J(t).norm(), 1e-12});
      CHECK(std::abs(adjoint_defect(a, b, t)) <= 1e-7 * scale);
    }
  }

  TEST_CASE("adjoint defect demands a shared ray") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), 1);
    RayFrame f1(S.bundle, v, 2.0), f2(S.bundle, v, 2.0);
    NJacobiField a(f1, vec2(1, 0)), b(f2, vec2(1, 0));
    CHECK_THROWS_AS(adjoint_defect(a, b, 0.5), PathMismatch);
  }

  TEST_CASE("exp differential: full rank before the focal time, kernel at it") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.5);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    RayFrame frame(S.bundle, v, 2.5);
    ExpDifferential before = exp_differential(frame, 0.6);
    CHECK(before.rank == 2);
    CHECK(std::abs(frame.detD(0.6)) > 1e-10);
    ExpDifferential at = exp_differential(frame, 1.0);
    CHECK(at.rank == 1);
    REQUIRE(at.kernel.cols() == 1);
    // kernel = tangential pair, never the radial one
    CHECK(std::abs(at.kernel(frame.basis().radial_index, 0)) < 1e-7);
    CHECK(std::abs(at.kernel(1, 0)) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("frame completeness: det nonzero off focal times (sphere equator)") {
    SphereEquatorSetup S;
    UnitNormal v = S.bundle.unit_normal(Vec(Vec::Constant(1, 1.0)), Vec(0), 1);
    RayFrame frame(S.bundle, v, 5.0);
    for (double t : {0.5, 1.0, 2.0, 3.0, 4.0}) {
      ExpDifferential ed = exp_differential(frame, t);
      CHECK(std::abs(ed.D.determinant()) >
            1e-10 * std::pow(ed.singular_values[0], frame.n()));
    }
    CHECK(frame.frame_gram_drift() <= 1e-7);
    CHECK(frame.max_speed_drift() <= 1e-8);
  }

  TEST_CASE("isolated zeros: count stable under tolerance halving") {
    SphereEquatorSetup S;
    UnitNormal v = S.bundle.unit_normal(Vec(Vec::Constant(1, 0.25)), Vec(0), 1);
    RayFrame coarse(S.bundle, v, 5.2, 1e-10);
    RayFrame fine(S.bundle, v, 5.2, 5e-11);
    NJacobiField a(coarse, vec2(0.0, 1.0)), b(fine, vec2(0.0, 1.0));
    CHECK(a.zeros(0.2, 5.2).size() == b.zeros(0.2, 5.2).size());
  }

  TEST_CASE("from_pair solves for a basis combination and rejects junk") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    RayFrame frame(S.bundle, v, 2.0);
    // J(0) = tangent, Jdot(0) = A J(0) = -J(0): the circle tangential field
    Vec e_tan = vec2(0.0, 1.0);  // p = (1,0): tangent is e_y
    NJacobiField f = NJacobiField::from_pair(frame, JacobiPair{e_tan, Vec(-e_tan)});
    CHECK(f.J(1.0).norm() < 1e-8);
    // invalid data: Jdot - A J(0) has a tangential component
    CHECK_THROWS_AS(NJacobiField::from_pair(frame, JacobiPair{e_tan, Vec(0.5 * e_tan)}),
                    PathMismatch);
  }

  TEST_CASE("second order identity at the circle focal point") {
    CircleSetup S;
    Vec params = Vec::Constant(1, 0.0);
    UnitNormal v = S.bundle.unit_normal(params, Vec(0), S.bundle.inward_side(params));
    RayFrame frame(S.bundle, v, 2.0);
    NormalSphereChart chart{&S.bundle, v};
    ExpDifferential ed = exp_differential(frame, 1.0);
    REQUIRE(ed.kernel.cols() == 1);
    SecondOrderCheck chk = second_order_check(frame, chart, 1.0, ed.kernel.col(0), 1e-3);
    CHECK(chk.defect <= 1e-5);
    // linearity: scaling the kernel vector scales Jdot
    SecondOrderCheck chk2 =
        second_order_check(frame, chart, 1.0, Vec(2.0 * ed.kernel.col(0)), 1e-3);
    CHECK((chk2.jdot_value - 2.0 * chk.jdot_value).norm() < 1e-9);
    // NotInKernel guard
    CHECK_THROWS_AS(
        second_order_check(frame, chart, 1.0, Vec(Vec::Unit(2, frame.basis().radial_index)), 1e-3),
        NotInKernel);
  }

  TEST_CASE("second order identity at an ellipse focal point") {
    GeodesicSystem sys = GeodesicSystem::chart(MetricModel::euclidean(2));
    NormalBundle bundle(Submanifold::ellipse(2.0, 1.0), sys, Vec(Vec::Zero(2)));
    Vec params = Vec::Constant(1, M_PI / 4);
    UnitNormal v = bundle.unit_normal(params, Vec(0), bundle.inward_side(params));
    RayFrame frame(bundle, v, 3.0);
    double lam = 2.5 * std::sqrt(2.5) / 2.0;  // (1 + 3 sin^2)^{3/2} / 2 at pi/4
    ExpDifferential ed = exp_differential(frame, lam);
    REQUIRE(ed.kernel.cols() == 1);
    NormalSphereChart chart{&bundle, v};
    SecondOrderCheck chk = second_order_check(frame, chart, lam, ed.kernel.col(0), 1e-3);
    CHECK(chk.defect <= 1e-4);
  }
}
