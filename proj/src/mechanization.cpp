#include "se23nav/mechanization.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace se23nav {

namespace {

Vec3d gravitation_at(const Vec3d& p, const EarthModel& em, const PropagationOptions& opt) {
  return opt.gravitation ? *opt.gravitation : gravitation(p, em);
}

void check_dt(double dt) {
  if (!(dt > 0.0) || dt > 0.1) {
    throw std::invalid_argument("propagate: dt must lie in (0, 0.1]");
  }
}

// Attitude step C <- exp(-omega_ie dt) C exp(gyro dt); exact for constant rates.
Mat3d attitude_step(const Mat3d& C, const Vec3d& gyro, const Vec3d& omega_ie, double dt) {
  Mat3d next = so3_exp((-omega_ie * dt).eval()) * C * so3_exp((gyro * dt).eval());
  if (orthogonality_defect(next) > 1e-9) next = reorthonormalize(next);
  return next;
}

}  // namespace

TransformedNavState to_transformed(const NavState& s, const EarthModel& em) {
  return TransformedNavState{s.C, s.v + em.omega_ie().cross(s.p), s.p};
}

NavState from_transformed(const TransformedNavState& s, const EarthModel& em) {
  return NavState{s.C, s.tvel - em.omega_ie().cross(s.p), s.p};
}

StateDerivative classic_derivative(const NavState& s, const ImuSample& u,
                                   const EarthModel& em, const PropagationOptions& opt) {
  const Vec3d w = em.omega_ie();
  StateDerivative d;
  d.Cdot = s.C * skew(u.gyro) - skew(w) * s.C;
  d.vdot = s.C * u.accel - 2.0 * w.cross(s.v) - w.cross(w.cross(s.p)) +
           gravitation_at(s.p, em, opt);
  d.pdot = s.v;
  return d;
}

StateDerivative transformed_derivative(const TransformedNavState& s, const ImuSample& u,
                                       const EarthModel& em, const PropagationOptions& opt) {
  const Vec3d w = em.omega_ie();
  StateDerivative d;
  d.Cdot = s.C * skew(u.gyro) - skew(w) * s.C;
  d.vdot = s.C * u.accel - w.cross(s.tvel) + gravitation_at(s.p, em, opt);
  d.pdot = s.tvel - w.cross(s.p);
  return d;
}

TransformedNavState propagate(const TransformedNavState& s, const ImuSample& u,
                              const EarthModel& em, const PropagationOptions& opt) {
  check_dt(u.dt);
  const double dt = u.dt;
  const Vec3d w = em.omega_ie();
  const Mat3d Et = so3_exp((-w * dt).eval());  // earth rotation over the step

  TransformedNavState n;
  n.C = attitude_step(s.C, u.gyro, w, dt);

  // Trapezoid on the rotating-frame integral of a(t) = C f + g_bar:
  //   w(t) = exp(omega t) tvel(t)  =>  w_dot = exp(omega t) a(t).
  const Vec3d a0 = s.C * u.accel + gravitation_at(s.p, em, opt);
  const Vec3d p_pred = s.p + dt * (s.tvel - w.cross(s.p));
  const Vec3d a1 = n.C * u.accel + gravitation_at(p_pred, em, opt);
  n.tvel = Et * (s.tvel + 0.5 * dt * a0) + 0.5 * dt * a1;

  // Same device for dp/dt = tvel - omega x p.
  n.p = Et * (s.p + 0.5 * dt * s.tvel) + 0.5 * dt * n.tvel;
  return n;
}

NavState propagate_classic(const NavState& s, const ImuSample& u, const EarthModel& em,
                           const PropagationOptions& opt) {
  check_dt(u.dt);
  const double dt = u.dt;
  const Vec3d w = em.omega_ie();

  NavState n;
  n.C = attitude_step(s.C, u.gyro, w, dt);

  // Implicit trapezoid on the linear (v, p) system
  //   d/dt [v; p] = [-2(w x), -(w x)^2; I, 0] [v; p] + [C f + g_bar; 0].
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  A.block<3, 3>(0, 0) = -2.0 * skew(w);
  A.block<3, 3>(0, 3) = -skew(w) * skew(w);
  A.block<3, 3>(3, 0) = Mat3d::Identity();

  const Vec3d u0 = s.C * u.accel + gravitation_at(s.p, em, opt);
  const Vec3d p_pred = s.p + dt * s.v;
  const Vec3d u1 = n.C * u.accel + gravitation_at(p_pred, em, opt);

  Eigen::Matrix<double, 6, 1> x0, rhs;
  x0 << s.v, s.p;
  rhs = (Eigen::Matrix<double, 6, 6>::Identity() + 0.5 * dt * A) * x0;
  rhs.head<3>() += 0.5 * dt * (u0 + u1);
  const Eigen::Matrix<double, 6, 6> lhs =
      Eigen::Matrix<double, 6, 6>::Identity() - 0.5 * dt * A;
  const Eigen::Matrix<double, 6, 1> x1 = lhs.partialPivLu().solve(rhs);
  n.v = x1.head<3>();
  n.p = x1.tail<3>();
  return n;
}

namespace {

template <typename State, typename Deriv>
State rk4_step(const State& s, const ImuSample& u, const EarthModel& em,
               const PropagationOptions& opt, Deriv deriv) {
  const double dt = u.dt;
  auto advance = [](const State& base, const StateDerivative& d, double h) {
    State out = base;
    out.C += h * d.Cdot;
    if constexpr (requires { out.v; }) out.v += h * d.vdot; else out.tvel += h * d.vdot;
    out.p += h * d.pdot;
    return out;
  };
  const StateDerivative k1 = deriv(s, u, em, opt);
  const StateDerivative k2 = deriv(advance(s, k1, dt / 2.0), u, em, opt);
  const StateDerivative k3 = deriv(advance(s, k2, dt / 2.0), u, em, opt);
  const StateDerivative k4 = deriv(advance(s, k3, dt), u, em, opt);
  StateDerivative sum;
  sum.Cdot = (k1.Cdot + 2.0 * k2.Cdot + 2.0 * k3.Cdot + k4.Cdot) / 6.0;
  sum.vdot = (k1.vdot + 2.0 * k2.vdot + 2.0 * k3.vdot + k4.vdot) / 6.0;
  sum.pdot = (k1.pdot + 2.0 * k2.pdot + 2.0 * k3.pdot + k4.pdot) / 6.0;
  State out = advance(s, sum, dt);
  out.C = reorthonormalize(out.C);
  return out;
}

}  // namespace

TransformedNavState propagate_rk4(const TransformedNavState& s, const ImuSample& u,
                                  const EarthModel& em, const PropagationOptions& opt) {
  check_dt(u.dt);
  return rk4_step(s, u, em, opt,
                  [](const TransformedNavState& x, const ImuSample& uu,
                     const EarthModel& e, const PropagationOptions& o) {
                    return transformed_derivative(x, uu, e, o);
                  });
}

NavState propagate_classic_rk4(const NavState& s, const ImuSample& u, const EarthModel& em,
                               const PropagationOptions& opt) {
  check_dt(u.dt);
  return rk4_step(s, u, em, opt,
                  [](const NavState& x, const ImuSample& uu, const EarthModel& e,
                     const PropagationOptions& o) {
                    return classic_derivative(x, uu, e, o);
                  });
}

Mat5d group_dynamics(const Mat5d& chi, const ImuSample& u, const Vec3d& omega_ie,
                     const Vec3d& gravitation, DynamicsKind kind) {
  const Mat3d C = chi.block<3, 3>(0, 0);
  const Vec3d vel = chi.block<3, 1>(0, 3);
  const Vec3d pos = chi.block<3, 1>(0, 4);
  const Mat3d wx = skew(omega_ie);

  Mat5d f = Mat5d::Zero();
  f.block<3, 3>(0, 0) = C * skew(u.gyro) - wx * C;
  if (kind == DynamicsKind::transformed) {
    f.block<3, 1>(0, 3) = C * u.accel - wx * vel + gravitation;
    f.block<3, 1>(0, 4) = vel - wx * pos;
  } else {
    f.block<3, 1>(0, 3) = C * u.accel - 2.0 * wx * vel - wx * wx * pos + gravitation;
    f.block<3, 1>(0, 4) = vel;
  }
  return f;
}

double group_affine_residual(const Mat5d& a, const Mat5d& b, const ImuSample& u,
                             const Vec3d& omega_ie, const Vec3d& gravitation,
                             DynamicsKind kind) {
  const Mat5d fab = group_dynamics(a * b, u, omega_ie, gravitation, kind);
  const Mat5d fi = group_dynamics(Mat5d::Identity(), u, omega_ie, gravitation, kind);
  const Mat5d rhs = group_dynamics(a, u, omega_ie, gravitation, kind) * b +
                    a * group_dynamics(b, u, omega_ie, gravitation, kind) - a * fi * b;
  return (fab - rhs).norm() / fab.norm();
}

}  // namespace se23nav
