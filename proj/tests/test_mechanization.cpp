#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "oracle.hpp"
#include "se23nav/mechanization.hpp"
#include "se23nav/simulator.hpp"

using namespace se23nav;

namespace {

const EarthModel em;

// Body frame aligned with local NED, zero ground velocity, IMU reading exactly
// what a motionless unit senses: earth rate and minus-gravity reaction.
struct StaticTruth {
  NavState nav;
  ImuSample u;
};

StaticTruth static_truth(double lat, double lon, double h, double dt) {
  StaticTruth s;
  const Geodetic g{lat, lon, h};
  s.nav.C = ecef_to_ned_rotation(g).transpose();
  s.nav.v = Vec3d::Zero();
  s.nav.p = geodetic_to_ecef(g, em);
  s.u.t = dt;
  s.u.dt = dt;
  s.u.gyro = s.nav.C.transpose() * em.omega_ie();
  s.u.accel = -s.nav.C.transpose() * gravity(s.nav.p, em);
  return s;
}

TransformedNavState random_state(GaussianRng& rng) {
  TransformedNavState s;
  s.C = oracle::random_rotation(rng);
  s.tvel = 150.0 * rng.normal3();
  Vec3d dir = rng.normal3();
  s.p = (em.a + 20000.0 + 5000.0 * rng.normal()) * dir / dir.norm();
  return s;
}

ImuSample random_imu(GaussianRng& rng, double dt) {
  ImuSample u;
  u.t = dt;
  u.dt = dt;
  u.gyro = 0.05 * rng.normal3();
  u.accel = 8.0 * rng.normal3();
  return u;
}

}  // namespace

TEST_CASE("transformed velocity equals ground velocity plus the earth-rate lever arm") {
  NavState s;
  s.v = Vec3d(3, -4, 5);
  s.p = Vec3d::Zero();
  CHECK((to_transformed(s, em).tvel - s.v).norm() == 0.0);

  s.v = Vec3d::Zero();
  s.p = Vec3d(em.a, 0, 0);
  const Vec3d tvel = to_transformed(s, em).tvel;
  CHECK((tvel - Vec3d(0.0, em.omega * em.a, 0.0)).norm() < 1e-12);
  CHECK(tvel.y() == doctest::Approx(465.101).epsilon(1e-5));
}

TEST_CASE("to_transformed and from_transformed are mutual inverses") {
  GaussianRng rng(31);
  for (int i = 0; i < 100; ++i) {
    NavState s;
    s.C = oracle::random_rotation(rng);
    s.v = 30.0 * rng.normal3();
    Vec3d dir = rng.normal3();
    s.p = em.a * dir / dir.norm();
    const NavState back = from_transformed(to_transformed(s, em), em);
    CHECK((back.v - s.v).norm() < 1e-10);
    CHECK((back.p - s.p).norm() == 0.0);
  }
}

TEST_CASE("a motionless state is an equilibrium of both mechanizations") {
  const StaticTruth s = static_truth(0.4921, 1.9719, 60.0, 0.01);

  const StateDerivative dc = classic_derivative(s.nav, s.u, em);
  CHECK(dc.Cdot.norm() < 1e-15);
  CHECK(dc.vdot.norm() < 1e-11);
  CHECK(dc.pdot.norm() == 0.0);

  const TransformedNavState t = to_transformed(s.nav, em);
  const StateDerivative dt_ = transformed_derivative(t, s.u, em);
  CHECK(dt_.Cdot.norm() < 1e-15);
  CHECK(dt_.pdot.norm() < 1e-12);
}

TEST_CASE("with earth rotation disabled both mechanizations coincide") {
  EarthModel still = em;
  still.omega = 0.0;
  GaussianRng rng(32);
  for (int i = 0; i < 20; ++i) {
    const TransformedNavState s = random_state(rng);
    const ImuSample u = random_imu(rng, 0.01);
    const NavState c{s.C, s.tvel, s.p};  // tvel == v when omega_ie = 0
    const StateDerivative a = transformed_derivative(s, u, still);
    const StateDerivative b = classic_derivative(c, u, still);
    CHECK((a.Cdot - b.Cdot).norm() < 1e-15);
    CHECK((a.vdot - b.vdot).norm() < 1e-12);
    CHECK((a.pdot - b.pdot).norm() < 1e-12);
  }
}

TEST_CASE("transformed_derivative is the chain rule image of classic_derivative") {
  GaussianRng rng(33);
  const Mat3d wx = skew(em.omega_ie());
  for (int i = 0; i < 50; ++i) {
    const TransformedNavState s = random_state(rng);
    const ImuSample u = random_imu(rng, 0.01);
    const NavState c = from_transformed(s, em);
    const StateDerivative dc = classic_derivative(c, u, em);
    const StateDerivative dt_ = transformed_derivative(s, u, em);
    // d/dt (v + omega x p) = vdot + omega x pdot
    CHECK((dt_.vdot - (dc.vdot + wx * dc.pdot)).norm() < 1e-10);
    CHECK((dt_.pdot - dc.pdot).norm() < 1e-10);
    CHECK((dt_.Cdot - dc.Cdot).norm() == 0.0);
  }
}

TEST_CASE("one tiny propagation step reproduces the continuous derivative") {
  GaussianRng rng(34);
  const double dt = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const TransformedNavState s = random_state(rng);
    const ImuSample u = random_imu(rng, dt);
    const TransformedNavState n = propagate(s, u, em);
    const StateDerivative d = transformed_derivative(s, u, em);
    CHECK(((n.C - s.C) / dt - d.Cdot).norm() / std::max(1.0, d.Cdot.norm()) < 1e-6);
    CHECK(((n.tvel - s.tvel) / dt - d.vdot).norm() / std::max(1.0, d.vdot.norm()) < 1e-6);
    // the position difference cancels ~16 digits at |p| ~ 6.4e6, leaving ~eps|p|/dt noise
    CHECK(((n.p - s.p) / dt - d.pdot).norm() / std::max(1.0, d.pdot.norm()) < 1e-5);
  }
}

TEST_CASE("propagate rejects out-of-range step sizes and is continuous at tiny dt") {
  GaussianRng rng(35);
  const TransformedNavState s = random_state(rng);
  ImuSample u = random_imu(rng, 0.2);
  CHECK_THROWS_AS((void)propagate(s, u, em), std::invalid_argument);
  u.dt = 0.0;
  CHECK_THROWS_AS((void)propagate(s, u, em), std::invalid_argument);
  u.dt = -0.01;
  CHECK_THROWS_AS((void)propagate(s, u, em), std::invalid_argument);

  u.dt = 1e-9;
  const TransformedNavState n = propagate(s, u, em);
  CHECK((n.C - s.C).norm() < 1e-7);
  CHECK((n.tvel - s.tvel).norm() < 1e-6);
  CHECK((n.p - s.p).norm() < 1e-5);
}

TEST_CASE("static propagation holds position for 300 seconds") {
  const StaticTruth s = static_truth(0.4921, 1.9719, 60.0, 0.01);
  TransformedNavState t = to_transformed(s.nav, em);
  const Vec3d p0 = t.p;
  ImuSample u = s.u;
  for (int k = 1; k <= 30000; ++k) {
    u.t = k * 0.01;
    t = propagate(t, u, em);
  }
  CHECK((t.p - p0).norm() < 1e-3);
  const NavState back = from_transformed(t, em);
  CHECK(back.v.norm() < 1e-5);
}

TEST_CASE("default and reference integrators agree over 10 dynamic seconds") {
  const StaticTruth s0 = static_truth(0.4921, 1.9719, 60.0, 1e-4);
  TransformedNavState a = to_transformed(s0.nav, em);
  TransformedNavState b = a;
  const double dt = 1e-4;
  for (int k = 1; k <= 100000; ++k) {
    const double t = k * dt;
    ImuSample u;
    u.t = t;
    u.dt = dt;
    // smooth low-dynamic maneuver on top of the static equilibrium
    u.gyro = s0.u.gyro + Vec3d(0.01 * std::sin(0.5 * t), 0.0, 0.02 * std::cos(0.3 * t));
    u.accel = s0.u.accel + Vec3d(0.5 * std::sin(0.7 * t), 0.3 * std::cos(0.2 * t), 0.0);
    a = propagate(a, u, em);
    b = propagate_rk4(b, u, em);
  }
  CHECK((a.p - b.p).norm() < 1e-3);
  CHECK((a.tvel - b.tvel).norm() < 1e-5);
}

TEST_CASE("transforming commutes with propagating over one step") {
  GaussianRng rng(36);
  for (int i = 0; i < 30; ++i) {
    TransformedNavState s = random_state(rng);
    s.tvel = 30.0 * rng.normal3();  // keep ground speed physical
    const ImuSample u = random_imu(rng, 0.01);
    const TransformedNavState via_transformed = propagate(s, u, em);
    const NavState via_classic = propagate_classic(from_transformed(s, em), u, em);
    const TransformedNavState lifted = to_transformed(via_classic, em);
    CHECK((via_transformed.p - lifted.p).norm() < 1e-6);
    CHECK((via_transformed.tvel - lifted.tvel).norm() < 1e-8);
  }
}

TEST_CASE("the 5x5 group dynamics matrix packs the transformed derivative") {
  GaussianRng rng(37);
  for (int i = 0; i < 30; ++i) {
    const TransformedNavState s = random_state(rng);
    const ImuSample u = random_imu(rng, 0.01);
    const Vec3d gbar = gravitation(s.p, em);
    const Mat5d f = group_dynamics(s.pose().matrix(), u, em.omega_ie(), gbar,
                                   DynamicsKind::transformed);
    PropagationOptions opt;
    opt.gravitation = gbar;
    const StateDerivative d = transformed_derivative(s, u, em, opt);
    CHECK((f.block<3, 3>(0, 0) - d.Cdot).norm() < 1e-12);
    CHECK((f.block<3, 1>(0, 3) - d.vdot).norm() < 1e-12);
    CHECK((f.block<3, 1>(0, 4) - d.pdot).norm() < 1e-12);
    CHECK(f.bottomRows<2>().norm() == 0.0);
  }
}

TEST_CASE("transformed dynamics satisfy the group-affine identity, classic dynamics do not") {
  GaussianRng rng(38);
  ImuSample u = random_imu(rng, 0.01);
  const Vec3d gbar = gravitation(Vec3d(em.a, 0, 0), em);

  const Mat5d id = Mat5d::Identity();
  CHECK(group_affine_residual(id, id, u, em.omega_ie(), gbar, DynamicsKind::transformed) <
        1e-15);

  double worst_transformed = 0.0;
  double best_classic = 1e300;
  for (int i = 0; i < 200; ++i) {
    const Mat5d a = random_state(rng).pose().matrix();
    const Mat5d b = random_state(rng).pose().matrix();
    worst_transformed = std::max(
        worst_transformed,
        group_affine_residual(a, b, u, em.omega_ie(), gbar, DynamicsKind::transformed));
    best_classic =
        std::min(best_classic,
                 group_affine_residual(a, b, u, em.omega_ie(), gbar, DynamicsKind::classic));
  }
  CHECK(worst_transformed < 1e-9);
  CHECK(best_classic > 1e-3);
}

TEST_CASE("attitude stays orthonormal through a million steps") {
  TransformedNavState s;
  s.C = Mat3d::Identity();
  s.tvel = Vec3d::Zero();
  s.p = Vec3d(em.a, 0, 0);
  PropagationOptions opt;
  opt.gravitation = Vec3d::Zero();  // pure-rotation exercise, no free fall
  ImuSample u;
  u.dt = 0.01;
  u.gyro = Vec3d(0.02, 0.015, 0.01);
  u.accel = Vec3d::Zero();
  for (int k = 1; k <= 1000000; ++k) {
    u.t = k * 0.01;
    s = propagate(s, u, em, opt);
  }
  CHECK(orthogonality_defect(s.C) < 1e-8);
}
