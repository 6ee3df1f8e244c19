// Linearized 15-state error models for the ECEF mechanization, in three flavors:
//
//   right  group error on the transformed state, truth * inverse(estimate)
//   left   group error on the transformed state, inverse(estimate) * truth
//   so     additive errors on the classic state with an SO(3) attitude error
//
// Error vector ordering is always [phi, dv, dp, gyro_bias, accel_bias]. The left
// model's Jacobians depend only on the IMU sample; the right model's navigation
// block depends only on earth constants (its bias-coupling columns carry the
// estimate); the so model couples the estimated attitude into the dynamics.
//
// Bias states model random constants: no process noise, no feedback into the IMU.

#pragma once

#include <optional>

#include "se23nav/mechanization.hpp"

namespace se23nav {

using Vec6d = Eigen::Matrix<double, 6, 1>;
using Vec9d = Eigen::Matrix<double, 9, 1>;
using Vec15d = Eigen::Matrix<double, 15, 1>;
using Mat6d = Eigen::Matrix<double, 6, 6>;
using Mat9d = Eigen::Matrix<double, 9, 9>;
using Mat15d = Eigen::Matrix<double, 15, 15>;
using Mat15x6d = Eigen::Matrix<double, 15, 6>;

enum class ErrorDef { right, left, so };

struct ErrorState15 {
  ErrorDef def = ErrorDef::right;
  Vec3d phi = Vec3d::Zero();
  Vec3d dv = Vec3d::Zero();
  Vec3d dp = Vec3d::Zero();
  Vec3d gyro_bias = Vec3d::Zero();
  Vec3d accel_bias = Vec3d::Zero();

  Vec15d vector() const {
    Vec15d x;
    x << phi, dv, dp, gyro_bias, accel_bias;
    return x;
  }
  static ErrorState15 FromVector(ErrorDef def, const Vec15d& x) {
    return ErrorState15{def, x.segment<3>(0), x.segment<3>(3), x.segment<3>(6),
                        x.segment<3>(9), x.segment<3>(12)};
  }
};

// Continuous-time white-noise PSDs (rad/s/sqrt(Hz), m/s^2/sqrt(Hz)) and the standard
// deviations of the run-constant biases.
struct NoiseSpec {
  Vec3d gyro_psd = Vec3d::Zero();
  Vec3d accel_psd = Vec3d::Zero();
  Vec3d gyro_bias_std = Vec3d::Zero();
  Vec3d accel_bias_std = Vec3d::Zero();
};

// Block-diagonal PSD of the driving noise [gyro, accel].
Mat6d process_noise_psd(const NoiseSpec& n);

struct ProcessModel {
  Mat15d F = Mat15d::Zero();
  Mat15x6d G = Mat15x6d::Zero();
};

struct MeasurementModel {
  Eigen::MatrixXd H;   // m x 15
  Eigen::VectorXd z;   // m
  Eigen::MatrixXd R;   // m x m
};

// Process models. The right model's navigation block needs gravitation; it is taken
// at the estimated position unless an override (the error-free-constant assumption)
// is supplied.
ProcessModel f_right(const TransformedNavState& est, const EarthModel& em,
                     const std::optional<Vec3d>& gravitation_override = {});
ProcessModel f_left(const ImuSample& u);
ProcessModel f_so(const NavState& est, const ImuSample& u, const EarthModel& em);

// GPS aiding. y = v_gps + omega_ie x p_gps with covariance R_y (ECEF axes).
MeasurementModel h_gps_right(const TransformedNavState& est, const Vec3d& y,
                             const Mat3d& R_y);
// Left form works with the body-resolved innovation z_bar = C~^T (tvel~ - y), whose
// measurement matrix is the constant [0, -I, 0].
MeasurementModel h_gps_left(const TransformedNavState& est, const Vec3d& y,
                            const Mat3d& R_y);
// The so filter consumes velocity and position fixes directly (6 rows).
MeasurementModel h_gps_so(const NavState& est, const Vec3d& v_gps, const Vec3d& p_gps,
                          const Mat3d& R_v, const Mat3d& R_p);

// Odometer aiding. v_b is the measured body velocity with covariance R_b (body axes).
MeasurementModel h_odo_right(const TransformedNavState& est, const Vec3d& v_b,
                             const Mat3d& R_b, const EarthModel& em);
MeasurementModel h_odo_left(const TransformedNavState& est, const Vec3d& v_b,
                            const Mat3d& R_b, const EarthModel& em);
MeasurementModel h_odo_so(const NavState& est, const Vec3d& v_b, const Mat3d& R_b);

// Exact (not linearized) navigation error between a truth state and an estimate.
// For right/left these are the log coordinates of the invariant group error
// (truth * est^{-1} and est^{-1} * truth respectively); for so, the additive
// errors alongside the SO(3) log. [phi, dv, dp].
Vec9d nav_error_right(const TransformedNavState& truth, const TransformedNavState& est);
Vec9d nav_error_left(const TransformedNavState& truth, const TransformedNavState& est);
Vec9d nav_error_so(const NavState& truth, const NavState& est);

// Exact inverses of the above: construct the estimate that carries error e relative
// to truth. Used by linearization oracles and scenario setup.
TransformedNavState estimate_with_error_right(const TransformedNavState& truth, const Vec9d& e);
TransformedNavState estimate_with_error_left(const TransformedNavState& truth, const Vec9d& e);
NavState estimate_with_error_so(const NavState& truth, const Vec9d& e);

}  // namespace se23nav
