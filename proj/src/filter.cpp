#include "se23nav/filter.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace se23nav {
namespace {

constexpr double kPsdEigRatio = -1e-10;  // min eigenvalue floor, relative to trace

// Re-symmetrizes P and updates the hygiene counters. The LDLT inertia check is the
// fast path; only a (numerically) indefinite factorization pays for an eigensolve.
void audit_covariance(FilterState& st) {
  auto& h = st.hygiene;
  h.epochs += 1;
  if (!st.P.allFinite()) {  // NaN compares false everywhere below, so catch it here
    h.psd_ok = false;
    return;
  }
  const double scale = std::max(1.0, st.P.cwiseAbs().maxCoeff());
  const double asym = (st.P - st.P.transpose()).cwiseAbs().maxCoeff() / scale;
  if (asym > h.max_asymmetry) h.max_asymmetry = asym;
  st.P = ((st.P + st.P.transpose()) * 0.5).eval();

  Eigen::LDLT<Mat15d> ldlt(st.P);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= 0.0) return;

  h.eig_fallbacks += 1;
  Eigen::SelfAdjointEigenSolver<Mat15d> eig(st.P, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double trace = std::max(st.P.trace(), 1e-300);
  const double ratio = lambda_min / trace;
  if (ratio < h.worst_eig_ratio) h.worst_eig_ratio = ratio;
  if (ratio < kPsdEigRatio) h.psd_ok = false;
}

void record_feedback_residual(FilterState& st, double residual) {
  if (residual > st.hygiene.max_feedback_residual)
    st.hygiene.max_feedback_residual = residual;
}

}  // namespace

TransformedNavState FilterState::transformed(const EarthModel& em) const {
  if (def == ErrorDef::so) return to_transformed(NavState{C, vel, pos}, em);
  return TransformedNavState{C, vel, pos};
}

NavState FilterState::classic(const EarthModel& em) const {
  if (def == ErrorDef::so) return NavState{C, vel, pos};
  return from_transformed(TransformedNavState{C, vel, pos}, em);
}

Mat9d right_covariance_transform(const TransformedNavState& nav0, const EarthModel& em) {
  Mat9d t = Mat9d::Zero();
  t.block<3, 3>(0, 0) = Mat3d::Identity();
  t.block<3, 3>(3, 0) = skew(nav0.tvel);
  t.block<3, 3>(3, 3) = -Mat3d::Identity();
  t.block<3, 3>(3, 6) = -skew(em.omega_ie());
  t.block<3, 3>(6, 0) = skew(nav0.p);
  t.block<3, 3>(6, 6) = -Mat3d::Identity();
  return t;
}

Mat9d left_covariance_transform(const TransformedNavState& nav0, const EarthModel& em) {
  const Mat3d Ct = nav0.C.transpose();
  Mat9d t = Mat9d::Zero();
  t.block<3, 3>(0, 0) = Mat3d::Identity();
  t.block<3, 3>(3, 3) = -Ct;
  t.block<3, 3>(3, 6) = -Ct * skew(em.omega_ie());
  t.block<3, 3>(6, 6) = -Ct;
  return t;
}

Mat15d init_covariance(const FilterConfig& cfg, const NavState& nav0, const EarthModel& em) {
  const Mat3d C_en = ecef_to_ned_rotation(ecef_to_geodetic(nav0.p, em));
  const Mat3d C_ne = C_en.transpose();

  Mat15d p0 = Mat15d::Zero();
  p0.block<3, 3>(0, 0) = C_ne * cfg.init_attitude_std.cwiseAbs2().asDiagonal() * C_en;
  p0.block<3, 3>(3, 3) = C_ne * cfg.init_vel_std.cwiseAbs2().asDiagonal() * C_en;
  p0.block<3, 3>(6, 6) = C_ne * cfg.init_pos_std.cwiseAbs2().asDiagonal() * C_en;
  p0.block<3, 3>(9, 9) = cfg.noise.gyro_bias_std.cwiseAbs2().asDiagonal();
  p0.block<3, 3>(12, 12) = cfg.noise.accel_bias_std.cwiseAbs2().asDiagonal();
  p0 = ((p0 + p0.transpose()) * 0.5).eval();  // the NED congruences round asymmetrically

  if (cfg.def == ErrorDef::so) return p0;

  const TransformedNavState tnav = to_transformed(nav0, em);
  const Mat9d t9 = cfg.def == ErrorDef::right ? right_covariance_transform(tnav, em)
                                              : left_covariance_transform(tnav, em);
  Mat15d t = Mat15d::Identity();
  t.topLeftCorner<9, 9>() = t9;
  Mat15d p = t * p0 * t.transpose();
  return ((p + p.transpose()) * 0.5).eval();
}

FilterState init_filter(const FilterConfig& cfg, const NavState& nav0, double t0,
                        const EarthModel& em) {
  if (cfg.bias_feedback)
    throw std::invalid_argument("bias feedback is not supported: biases are open-loop");
  if ((cfg.init_attitude_std.array() < 0).any() || (cfg.init_vel_std.array() < 0).any() ||
      (cfg.init_pos_std.array() < 0).any() ||
      (cfg.noise.gyro_bias_std.array() < 0).any() ||
      (cfg.noise.accel_bias_std.array() < 0).any())
    throw std::invalid_argument("initial standard deviations must be nonnegative");

  FilterState st;
  st.def = cfg.def;
  if (cfg.def == ErrorDef::so) {
    st.C = nav0.C;
    st.vel = nav0.v;
    st.pos = nav0.p;
  } else {
    const TransformedNavState tnav = to_transformed(nav0, em);
    st.C = tnav.C;
    st.vel = tnav.tvel;
    st.pos = tnav.p;
  }
  st.P = init_covariance(cfg, nav0, em);
  st.t = t0;
  audit_covariance(st);
  return st;
}

void propagate_filter(FilterState& st, const ImuSample& u, const FilterConfig& cfg,
                      const EarthModel& em, const PropagationOptions& opt) {
  ProcessModel pm;
  switch (st.def) {
    case ErrorDef::right:
      pm = f_right(TransformedNavState{st.C, st.vel, st.pos}, em, opt.gravitation);
      break;
    case ErrorDef::left:
      pm = f_left(u);
      break;
    case ErrorDef::so:
      pm = f_so(NavState{st.C, st.vel, st.pos}, u, em);
      break;
  }

  if (st.def == ErrorDef::so) {
    const NavState n = propagate_classic(NavState{st.C, st.vel, st.pos}, u, em, opt);
    st.C = n.C;
    st.vel = n.v;
    st.pos = n.p;
  } else {
    const TransformedNavState n =
        propagate(TransformedNavState{st.C, st.vel, st.pos}, u, em, opt);
    st.C = n.C;
    st.vel = n.tvel;
    st.pos = n.p;
  }
  st.t = u.t;  // sample stamps the end of its validity interval

  // F = [A B; 0 0], so Phi = [Phi9, Gamma; 0, I] with the blocks below, and the
  // bias rows of G are zero, confining Q_d to the navigation block.
  const double dt = u.dt;
  const Mat9d A = pm.F.topLeftCorner<9, 9>();
  const Eigen::Matrix<double, 9, 6> B = pm.F.block<9, 6>(0, 9);
  const Eigen::Matrix<double, 9, 6> Gn = pm.G.topRows<9>();
  const Mat9d Adt = A * dt;
  const Mat9d Phi9 = Mat9d::Identity() + Adt + 0.5 * (Adt * Adt);
  const Eigen::Matrix<double, 9, 6> Gamma = B * dt + 0.5 * dt * (Adt * B);

  const Mat6d Qc = process_noise_psd(cfg.noise);
  const Mat9d Qd11 = Gn * Qc * Gn.transpose() * dt;

  const Mat9d P11 = st.P.topLeftCorner<9, 9>();
  const Eigen::Matrix<double, 9, 6> P12 = st.P.topRightCorner<9, 6>();
  const Mat6d P22 = st.P.bottomRightCorner<6, 6>();

  const Eigen::Matrix<double, 9, 6> M = Phi9 * P12 + Gamma * P22;  // new cross block
  const Mat9d cross = Phi9 * P12 * Gamma.transpose();
  st.P.topLeftCorner<9, 9>() = Phi9 * P11 * Phi9.transpose() + cross + cross.transpose() +
                               Gamma * P22 * Gamma.transpose() + Qd11;
  st.P.topRightCorner<9, 6>() = M;
  st.P.bottomLeftCorner<6, 9>() = M.transpose();

  audit_covariance(st);
}

ErrorState15 update_filter(FilterState& st, const MeasurementModel& m) {
  const Eigen::Index rows = m.H.rows();
  if (m.z.size() != rows || m.R.rows() != rows || m.R.cols() != rows || m.H.cols() != 15)
    throw std::invalid_argument("measurement model dimensions are inconsistent");

  Eigen::MatrixXd S = m.H * st.P * m.H.transpose() + m.R;
  S = ((S + S.transpose()) * 0.5).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("innovation covariance is not positive definite");

  const Eigen::MatrixXd PHt = st.P * m.H.transpose();           // 15 x m
  const Eigen::MatrixXd K = llt.solve(PHt.transpose()).transpose();  // P H^T S^-1
  const Vec15d dx = K * m.z;

  const Mat15d IKH = Mat15d::Identity() - K * m.H;
  st.P = IKH * st.P * IKH.transpose() + K * m.R * K.transpose();

  st.hygiene.updates += 1;
  audit_covariance(st);
  return ErrorState15::FromVector(st.def, dx);
}

void feedback(FilterState& st, const ErrorState15& dx) {
  const Mat3d C0 = st.C;
  const Vec3d v0 = st.vel;
  const Vec3d p0 = st.pos;
  const Mat3d dC = so3_exp(dx.phi);

  switch (st.def) {
    case ErrorDef::right: {
      // Group exponential of the estimated twist. The J_l factor matters here:
      // the position row carries |p0| ~ 6.4e6 m and exp(phi) p0 alone acquires
      // a (phi x)^2 p0 / 2 radial remainder, which J_l dp cancels for the
      // lever-correlated corrections the covariance produces. Truncating either
      // factor rectifies that remainder into a radial drift over many updates.
      const Mat3d J = left_jacobian(dx.phi);
      st.C = dC * C0;
      st.vel = dC * v0 + J * dx.dv;
      st.pos = dC * p0 + J * dx.dp;
      break;
    }
    case ErrorDef::left: {
      const Mat3d J = left_jacobian(dx.phi);
      st.C = C0 * dC;
      st.vel = v0 + C0 * (J * dx.dv);
      st.pos = p0 + C0 * (J * dx.dp);
      break;
    }
    case ErrorDef::so:
      st.C = dC * C0;
      st.vel = v0 - dx.dv;
      st.pos = p0 - dx.dp;
      break;
  }
  st.gyro_bias += dx.gyro_bias;
  st.accel_bias += dx.accel_bias;

  // Roundtrip audit: recover the applied correction from the (pre, post) state
  // pair through the matching error definition and compare with dx. Past the
  // log map's principal branch the coordinate recovery is ambiguous, so the
  // group translations are compared against the applied twist instead.
  Vec9d nav;
  nav << dx.phi, dx.dv, dx.dp;
  Vec9d err;
  if (dx.phi.norm() <= M_PI - 1e-3) {
    const TransformedNavState pre{C0, v0, p0};
    const TransformedNavState post{st.C, st.vel, st.pos};
    switch (st.def) {
      case ErrorDef::right:
        err = nav_error_right(post, pre) - nav;
        break;
      case ErrorDef::left:
        err = nav_error_left(post, pre) - nav;
        break;
      case ErrorDef::so:
        err = nav_error_so(NavState{st.C, st.vel, st.pos}, NavState{C0, v0, p0}) - nav;
        break;
    }
  } else {
    const Mat3d J = left_jacobian(dx.phi);
    const double att_res = st.def == ErrorDef::left ? (C0.transpose() * st.C - dC).norm()
                                                    : (st.C * C0.transpose() - dC).norm();
    Vec3d dv_res, dp_res;
    switch (st.def) {
      case ErrorDef::right:
        dv_res = (st.vel - dC * v0) - J * dx.dv;
        dp_res = (st.pos - dC * p0) - J * dx.dp;
        break;
      case ErrorDef::left:
        dv_res = C0.transpose() * (st.vel - v0) - J * dx.dv;
        dp_res = C0.transpose() * (st.pos - p0) - J * dx.dp;
        break;
      case ErrorDef::so:
        dv_res = (v0 - st.vel) - dx.dv;
        dp_res = (p0 - st.pos) - dx.dp;
        break;
    }
    err << Vec3d::Constant(att_res / std::sqrt(3.0)), dv_res, dp_res;
  }
  record_feedback_residual(st, err.norm() / std::max(1.0, nav.norm()));
}

}  // namespace se23nav
