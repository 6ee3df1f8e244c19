#include "se23nav/error_models.hpp"

namespace se23nav {
namespace {

Mat3d omega_skew(const EarthModel& em) { return skew(em.omega_ie()); }

}  // namespace

Mat6d process_noise_psd(const NoiseSpec& n) {
  Mat6d q = Mat6d::Zero();
  q.diagonal().head<3>() = n.gyro_psd.cwiseAbs2();
  q.diagonal().tail<3>() = n.accel_psd.cwiseAbs2();
  return q;
}

ProcessModel f_right(const TransformedNavState& est, const EarthModel& em,
                     const std::optional<Vec3d>& gravitation_override) {
  const Mat3d wx = omega_skew(em);
  const Vec3d g = gravitation_override ? *gravitation_override : gravitation(est.p, em);
  ProcessModel m;
  m.F.block<3, 3>(0, 0) = -wx;
  m.F.block<3, 3>(0, 9) = -est.C;
  m.F.block<3, 3>(3, 0) = skew(g);
  m.F.block<3, 3>(3, 3) = -wx;
  m.F.block<3, 3>(3, 9) = -skew(est.tvel) * est.C;
  m.F.block<3, 3>(3, 12) = -est.C;
  m.F.block<3, 3>(6, 3) = Mat3d::Identity();
  m.F.block<3, 3>(6, 6) = -wx;
  m.F.block<3, 3>(6, 9) = -skew(est.p) * est.C;
  m.G.block<3, 3>(0, 0) = -est.C;
  m.G.block<3, 3>(3, 0) = -skew(est.tvel) * est.C;
  m.G.block<3, 3>(3, 3) = -est.C;
  m.G.block<3, 3>(6, 0) = -skew(est.p) * est.C;
  return m;
}

ProcessModel f_left(const ImuSample& u) {
  const Mat3d wx = skew(u.gyro);
  ProcessModel m;
  m.F.block<3, 3>(0, 0) = -wx;
  m.F.block<3, 3>(0, 9) = -Mat3d::Identity();
  m.F.block<3, 3>(3, 0) = -skew(u.accel);
  m.F.block<3, 3>(3, 3) = -wx;
  m.F.block<3, 3>(3, 12) = -Mat3d::Identity();
  m.F.block<3, 3>(6, 3) = Mat3d::Identity();
  m.F.block<3, 3>(6, 6) = -wx;
  m.G.block<3, 3>(0, 0) = -Mat3d::Identity();
  m.G.block<3, 3>(3, 3) = -Mat3d::Identity();
  return m;
}

ProcessModel f_so(const NavState& est, const ImuSample& u, const EarthModel& em) {
  const Mat3d wx = omega_skew(em);
  ProcessModel m;
  m.F.block<3, 3>(0, 0) = -wx;
  m.F.block<3, 3>(0, 9) = -est.C;
  m.F.block<3, 3>(3, 0) = skew(Vec3d(est.C * u.accel));
  m.F.block<3, 3>(3, 3) = -2.0 * wx;
  m.F.block<3, 3>(3, 12) = est.C;
  m.F.block<3, 3>(6, 3) = Mat3d::Identity();
  m.G.block<3, 3>(0, 0) = -est.C;
  m.G.block<3, 3>(3, 3) = est.C;
  return m;
}

MeasurementModel h_gps_right(const TransformedNavState& est, const Vec3d& y,
                             const Mat3d& R_y) {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(3, 15);
  m.H.block<3, 3>(0, 0) = skew(est.tvel);
  m.H.block<3, 3>(0, 3) = -Mat3d::Identity();
  m.z = est.tvel - y;
  m.R = R_y;
  return m;
}

MeasurementModel h_gps_left(const TransformedNavState& est, const Vec3d& y,
                            const Mat3d& R_y) {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(3, 15);
  m.H.block<3, 3>(0, 3) = -Mat3d::Identity();
  m.z = est.C.transpose() * (est.tvel - y);
  m.R = est.C.transpose() * R_y * est.C;
  return m;
}

MeasurementModel h_gps_so(const NavState& est, const Vec3d& v_gps, const Vec3d& p_gps,
                          const Mat3d& R_v, const Mat3d& R_p) {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(6, 15);
  m.H.block<3, 3>(0, 3) = Mat3d::Identity();
  m.H.block<3, 3>(3, 6) = Mat3d::Identity();
  m.z = Eigen::VectorXd(6);
  m.z.head<3>() = est.v - v_gps;
  m.z.tail<3>() = est.p - p_gps;
  m.R = Eigen::MatrixXd::Zero(6, 6);
  m.R.topLeftCorner<3, 3>() = R_v;
  m.R.bottomRightCorner<3, 3>() = R_p;
  return m;
}

MeasurementModel h_odo_right(const TransformedNavState& est, const Vec3d& v_b,
                             const Mat3d& R_b, const EarthModel& em) {
  const Mat3d wx = omega_skew(em);
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(3, 15);
  m.H.block<3, 3>(0, 0) = -skew(est.p) * wx;
  m.H.block<3, 3>(0, 3) = -Mat3d::Identity();
  m.H.block<3, 3>(0, 6) = wx;
  m.z = est.tvel - wx * est.p - est.C * v_b;
  m.R = est.C * R_b * est.C.transpose();
  return m;
}

MeasurementModel h_odo_left(const TransformedNavState& est, const Vec3d& v_b,
                            const Mat3d& R_b, const EarthModel& em) {
  const Mat3d wx = omega_skew(em);
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(3, 15);
  m.H.block<3, 3>(0, 0) = (-skew(est.tvel) + wx * skew(est.p) - skew(est.p) * wx) * est.C;
  m.H.block<3, 3>(0, 3) = -est.C;
  m.H.block<3, 3>(0, 6) = wx * est.C;
  m.z = est.tvel - wx * est.p - est.C * v_b;
  m.R = est.C * R_b * est.C.transpose();
  return m;
}

MeasurementModel h_odo_so(const NavState& est, const Vec3d& v_b, const Mat3d& R_b) {
  MeasurementModel m;
  m.H = Eigen::MatrixXd::Zero(3, 15);
  m.H.block<3, 3>(0, 0) = -skew(est.v);
  m.H.block<3, 3>(0, 3) = Mat3d::Identity();
  m.z = est.v - est.C * v_b;
  m.R = est.C * R_b * est.C.transpose();
  return m;
}

Vec9d nav_error_right(const TransformedNavState& truth, const TransformedNavState& est) {
  // Log coordinates of truth * est^{-1}; the group translations carry a J_l factor.
  const Mat3d dC = truth.C * est.C.transpose();
  const Vec3d phi = so3_log(dC);
  const Mat3d Jinv = left_jacobian_inv(phi);
  Vec9d e;
  e.segment<3>(0) = phi;
  e.segment<3>(3) = Jinv * (truth.tvel - dC * est.tvel);
  e.segment<3>(6) = Jinv * (truth.p - dC * est.p);
  return e;
}

Vec9d nav_error_left(const TransformedNavState& truth, const TransformedNavState& est) {
  // Log coordinates of est^{-1} * truth.
  const Vec3d phi = so3_log(Mat3d(est.C.transpose() * truth.C));
  const Mat3d Jinv = left_jacobian_inv(phi);
  Vec9d e;
  e.segment<3>(0) = phi;
  e.segment<3>(3) = Jinv * (est.C.transpose() * (truth.tvel - est.tvel));
  e.segment<3>(6) = Jinv * (est.C.transpose() * (truth.p - est.p));
  return e;
}

Vec9d nav_error_so(const NavState& truth, const NavState& est) {
  Vec9d e;
  e.segment<3>(0) = so3_log(Mat3d(truth.C * est.C.transpose()));
  e.segment<3>(3) = est.v - truth.v;
  e.segment<3>(6) = est.p - truth.p;
  return e;
}

TransformedNavState estimate_with_error_right(const TransformedNavState& truth, const Vec9d& e) {
  // truth = exp(e) * est, so est = exp(e)^{-1} * truth.
  const Vec3d phi = e.segment<3>(0);
  const Mat3d dCt = so3_exp(phi).transpose();
  const Mat3d J = left_jacobian(phi);
  TransformedNavState est;
  est.C = dCt * truth.C;
  est.tvel = dCt * (truth.tvel - J * e.segment<3>(3));
  est.p = dCt * (truth.p - J * e.segment<3>(6));
  return est;
}

TransformedNavState estimate_with_error_left(const TransformedNavState& truth, const Vec9d& e) {
  // truth = est * exp(e), so est = truth * exp(e)^{-1}.
  const Vec3d phi = e.segment<3>(0);
  const Mat3d J = left_jacobian(phi);
  TransformedNavState est;
  est.C = truth.C * so3_exp(phi).transpose();
  est.tvel = truth.tvel - est.C * (J * e.segment<3>(3));
  est.p = truth.p - est.C * (J * e.segment<3>(6));
  return est;
}

NavState estimate_with_error_so(const NavState& truth, const Vec9d& e) {
  NavState est;
  est.C = so3_exp(Vec3d(-e.segment<3>(0))) * truth.C;
  est.v = truth.v + e.segment<3>(3);
  est.p = truth.p + e.segment<3>(6);
  return est;
}

}  // namespace se23nav
