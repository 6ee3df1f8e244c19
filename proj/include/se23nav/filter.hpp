// Error-state Kalman filter engine shared by the three error definitions.
//
// The filter owns the navigation estimate, the 15x15 covariance, and the
// accumulated bias estimates. The error-state mean is not carried between
// epochs: navigation components are fed back and reset at every update, and
// bias components accumulate in bias_estimate without ever being applied to
// the IMU stream (open-loop). Covariance is left untouched by the reset.

#pragma once

#include <cstdint>

#include "se23nav/error_models.hpp"

namespace se23nav {

struct FilterConfig {
  ErrorDef def = ErrorDef::right;

  // Initial 1-sigma navigation uncertainty on NED axes: attitude as
  // (roll, pitch, yaw) mapped onto (N, E, D), velocity and position as (N, E, D).
  Vec3d init_attitude_std = Vec3d::Zero();  // rad
  Vec3d init_vel_std = Vec3d::Zero();       // m/s
  Vec3d init_pos_std = Vec3d::Zero();       // m

  // Process noise PSDs plus the run-constant bias stds (initial bias covariance).
  NoiseSpec noise;

  // Measurement noise parameters consumed by the harness when building updates.
  double gps_vel_std = 0.1;       // m/s per ECEF axis
  double gps_pos_std = 10.0;      // m per ECEF axis (position fixes)
  double odo_scale_std = 0.001;   // scale error, fraction of speed
  double odo_vel_floor = 0.01;    // m/s, keeps R positive definite at standstill
  double odo_lateral_std = 0.05;  // m/s, slack on the non-holonomic constraint

  // Biases are estimated open-loop; init_filter rejects any attempt to close the loop.
  bool bias_feedback = false;
};

// Numerical health counters, maintained at every propagation and update.
struct FilterHygiene {
  bool psd_ok = true;                 // min eigenvalue >= -1e-10 * trace throughout
  double worst_eig_ratio = 0.0;       // most negative eigenvalue/trace seen
  double max_asymmetry = 0.0;         // max |P - P^T| entry / max |P| entry, pre-symmetrization
  double max_feedback_residual = 0.0; // error-definition roundtrip residual at feedback
  std::uint64_t epochs = 0;
  std::uint64_t updates = 0;
  std::uint64_t eig_fallbacks = 0;    // epochs where the LDLT certificate needed an eigensolve
};

struct FilterState {
  ErrorDef def = ErrorDef::right;
  Mat3d C = Mat3d::Identity();  // body-to-ECEF attitude estimate
  Vec3d vel = Vec3d::Zero();    // transformed velocity (right/left) or ground velocity (so)
  Vec3d pos = Vec3d::Zero();    // ECEF position estimate
  Mat15d P = Mat15d::Zero();
  Vec3d gyro_bias = Vec3d::Zero();   // accumulated estimates, never applied to the IMU
  Vec3d accel_bias = Vec3d::Zero();
  double t = 0.0;
  FilterHygiene hygiene;

  TransformedNavState transformed(const EarthModel& em) const;
  NavState classic(const EarthModel& em) const;
};

// 9x9 congruence transforms taking an additive-error (attitude/velocity/position)
// covariance onto the invariant error coordinates at the initial estimate.
Mat9d right_covariance_transform(const TransformedNavState& nav0, const EarthModel& em);
Mat9d left_covariance_transform(const TransformedNavState& nav0, const EarthModel& em);

// Initial covariance for the configured error definition. nav0 is the initial
// navigation estimate; its position anchors the NED axes on which the configured
// stds live. Bias blocks pass through untransformed.
Mat15d init_covariance(const FilterConfig& cfg, const NavState& nav0, const EarthModel& em);

// Builds the full filter state (converting nav0 to the transformed state for the
// right/left definitions). Throws std::invalid_argument on negative stds or
// bias_feedback = true.
FilterState init_filter(const FilterConfig& cfg, const NavState& nav0, double t0,
                        const EarthModel& em);

// Strapdown + covariance propagation over one IMU sample (dt in (0, 0.1]).
// Phi = I + F dt + (F dt)^2/2, Q_d = G Q_c G^T dt.
void propagate_filter(FilterState& st, const ImuSample& u, const FilterConfig& cfg,
                      const EarthModel& em, const PropagationOptions& opt = {});

// Joseph-form Kalman update; returns the error-state estimate dx = K z for
// feedback. Throws std::runtime_error if the innovation covariance is not
// positive definite.
ErrorState15 update_filter(FilterState& st, const MeasurementModel& m);

// Applies dx to the navigation estimate as the group exponential of the estimated
// twist -- the exact inverse of the log-coordinate error definition -- accumulates
// the bias components, and records the roundtrip residual.
// The error mean is implicitly reset to zero; P is not modified.
void feedback(FilterState& st, const ErrorState15& dx);

}  // namespace se23nav
