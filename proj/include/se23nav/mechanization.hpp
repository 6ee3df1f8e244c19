// ECEF strapdown mechanization in two algebraically equivalent forms:
//
//   classic      state (C, v, p):   v is ground velocity, dp/dt = v
//   transformed  state (C, w, p):   w = v + omega_ie x p, which makes the dynamics
//                                   group-affine on SE2(3)
//
// Both consume the same IMU samples (angular rate and specific force, body frame,
// treated as constant over the sample interval). The default propagator handles the
// earth-rotation part of each step in closed form and applies a trapezoidal rule to
// the remaining forcing, giving second-order accuracy with exact preservation of the
// static-on-earth equilibrium. An RK4 propagator is provided as a reference-quality
// alternative for truth generation and integrator tests.

#pragma once

#include <optional>

#include "se23nav/earth.hpp"
#include "se23nav/liegroup.hpp"

namespace se23nav {

// Classic state: attitude C (body to ECEF), ground velocity v, position p.
struct NavState {
  Mat3d C = Mat3d::Identity();
  Vec3d v = Vec3d::Zero();
  Vec3d p = Vec3d::Zero();
};

// Transformed state: attitude C, auxiliary velocity tvel = v + omega_ie x p, position p.
struct TransformedNavState {
  Mat3d C = Mat3d::Identity();
  Vec3d tvel = Vec3d::Zero();
  Vec3d p = Vec3d::Zero();

  ExtendedPosed pose() const { return ExtendedPosed{C, tvel, p}; }
};

// One IMU sample: rad/s and m/s^2 in the body frame, valid over (t - dt, t].
struct ImuSample {
  double t = 0.0;
  Vec3d gyro = Vec3d::Zero();
  Vec3d accel = Vec3d::Zero();
  double dt = 0.0;
};

struct StateDerivative {
  Mat3d Cdot = Mat3d::Zero();
  Vec3d vdot = Vec3d::Zero();
  Vec3d pdot = Vec3d::Zero();
};

// When set, `gravitation` replaces the position-dependent earth model attraction.
// The linearized error models treat gravitation as a constant vector; tests that
// check exactness of those models need the propagator to share that assumption.
struct PropagationOptions {
  std::optional<Vec3d> gravitation;
};

TransformedNavState to_transformed(const NavState& s, const EarthModel& em);
NavState from_transformed(const TransformedNavState& s, const EarthModel& em);

StateDerivative classic_derivative(const NavState& s, const ImuSample& u,
                                   const EarthModel& em,
                                   const PropagationOptions& opt = {});
StateDerivative transformed_derivative(const TransformedNavState& s, const ImuSample& u,
                                       const EarthModel& em,
                                       const PropagationOptions& opt = {});

// Single-sample strapdown step, dt must lie in (0, 0.1].
TransformedNavState propagate(const TransformedNavState& s, const ImuSample& u,
                              const EarthModel& em, const PropagationOptions& opt = {});
NavState propagate_classic(const NavState& s, const ImuSample& u, const EarthModel& em,
                           const PropagationOptions& opt = {});

// Reference-quality single steps (classic RK4 with attitude renormalization).
TransformedNavState propagate_rk4(const TransformedNavState& s, const ImuSample& u,
                                  const EarthModel& em, const PropagationOptions& opt = {});
NavState propagate_classic_rk4(const NavState& s, const ImuSample& u, const EarthModel& em,
                               const PropagationOptions& opt = {});

enum class DynamicsKind {
  transformed,  // group-affine on the transformed state
  classic,      // same embedding but classic velocity; not group-affine
};

// Right-hand side of the matrix ODE chi_dot = f(chi) on the 5x5 embedding, with
// gravitation passed explicitly (held constant).
Mat5d group_dynamics(const Mat5d& chi, const ImuSample& u, const Vec3d& omega_ie,
                     const Vec3d& gravitation, DynamicsKind kind);

// Relative Frobenius norm of f(ab) - f(a)b - a f(b) + a f(I) b. Vanishes (to
// roundoff) exactly when f is group-affine.
double group_affine_residual(const Mat5d& a, const Mat5d& b, const ImuSample& u,
                             const Vec3d& omega_ie, const Vec3d& gravitation,
                             DynamicsKind kind);

}  // namespace se23nav
