// Ground-truth trajectory synthesis and sensor simulation.
//
// Trajectories are planar driving profiles described in the body-rate table
// convention (x right, y forward, z up): a yaw rate turns the vehicle, a
// longitudinal acceleration changes speed, and everything else must be zero.
// The kinematics integrate in closed form on a local NED tangent frame fixed to
// the Earth at the origin, so the truth is exact (no integrator error); Earth
// rotation enters through the ideal IMU computed by inverting the strapdown
// dynamics. All randomness flows through GaussianRng (mt19937_64 + Box-Muller),
// which is bit-deterministic across platforms for a given seed.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "se23nav/mechanization.hpp"

namespace se23nav {

// One motion-profile row; rates/accelerations on body axes x right, y forward,
// z up. Only w.z (yaw rate) and a.y (longitudinal) may be nonzero; a.x is the
// redundant centripetal column and is ignored (the turn radius follows from
// speed and yaw rate).
struct MotionSegment {
  double duration = 0.0;    // s
  Vec3d w = Vec3d::Zero();  // rad/s (pitch, roll, yaw axes)
  Vec3d a = Vec3d::Zero();  // m/s^2 (lateral, longitudinal, up)
};

struct SensorSpec {
  double gyro_bias = 0.0;      // rad/s
  double gyro_arw = 0.0;       // rad/sqrt(s)
  double accel_bias = 0.0;     // m/s^2
  double accel_vrw = 0.0;      // m/s^2/sqrt(Hz)
  double gps_vel_std = 0.0;    // m/s per NED axis
  double gps_pos_std = 0.0;    // m per NED axis
  double odo_scale_std = 0.0;  // fraction of speed
};

struct TruthSample {
  double t = 0.0;
  NavState nav;                          // ECEF truth
  Vec3d body_rate = Vec3d::Zero();       // ideal gyro, rad/s
  Vec3d specific_force = Vec3d::Zero();  // ideal accelerometer, m/s^2
};

// GPS fix in exactly the units the replay log stores; keeping the boundary type
// identical to the serialized form makes replay bit-identical to in-memory runs.
struct GpsFix {
  double t = 0.0;
  double lat_deg = 0.0, lon_deg = 0.0, h_m = 0.0;
  double vn = 0.0, ve = 0.0, vd = 0.0;  // m/s, NED
};

// Odometer sample: forward speed only; lateral/vertical are exact zeros under
// the multiplicative error model.
struct OdoSample {
  double t = 0.0;
  double v_forward = 0.0;  // m/s

  Vec3d body_velocity() const { return Vec3d(v_forward, 0.0, 0.0); }
};

// Deterministic standard-normal source: std::mt19937_64 (sequence fixed by the
// C++ standard) feeding a Box-Muller transform (std::normal_distribution is
// implementation-defined, so it cannot back a bit-reproducibility contract).
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double normal();
  Vec3d normal3();

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Derives independent per-purpose seeds from a run seed.
std::uint64_t substream_seed(std::uint64_t run_seed, std::uint64_t tag);

inline constexpr std::uint64_t kTagImu = 1;
inline constexpr std::uint64_t kTagGps = 2;
inline constexpr std::uint64_t kTagOdo = 3;
inline constexpr std::uint64_t kTagInit = 4;
inline constexpr std::uint64_t kTagInitNav = 5;

// C_b^n from ZYX Euler angles (yaw about down, then pitch, then roll).
Mat3d euler_zyx_to_rot(double roll, double pitch, double yaw);
// Inverse; flags |pitch| > 89 deg when a non-null gimbal pointer is given.
Vec3d rot_to_euler_zyx(const Mat3d& C, bool* gimbal = nullptr);

class TrajectoryModel {
 public:
  // Throws std::invalid_argument on empty profiles, nonpositive durations,
  // out-of-plane rates/accelerations, or speed crossing below zero.
  TrajectoryModel(std::vector<MotionSegment> profile, const Geodetic& origin,
                  const EarthModel& em);

  double duration() const { return total_duration_; }
  const EarthModel& earth() const { return em_; }
  const Mat3d& C_ne() const { return C_ne_; }  // tangent NED to ECEF

  NavState nav_at(double t) const;
  double speed_at(double t) const;          // planar speed (= forward body velocity)
  Vec3d body_rate_at(double t) const;       // ideal omega_ib^b
  Vec3d specific_force_at(double t) const;  // ideal f^b
  TruthSample sample(double t) const;

 private:
  struct SegmentState {  // planar state at segment start + rates
    double t0, psi, speed, north, east;
    double yaw_rate, accel;
  };
  const SegmentState& segment_at(double t, double* tau) const;
  void planar_at(double t, double* psi, double* speed, double* north, double* east,
                 double* vdot_n, double* vdot_e) const;

  EarthModel em_;
  Mat3d C_ne_;
  Vec3d p0_ecef_;
  std::vector<SegmentState> segments_;
  double total_duration_ = 0.0;
};

// Streaming IMU synthesis at fixed rate; sample k covers ((k-1)dt, k dt] and is
// stamped at the interval end. Bias vectors are drawn once per stream (fixed
// magnitude, random direction).
class ImuSynth {
 public:
  ImuSynth(const TrajectoryModel& model, const SensorSpec& spec, double dt,
           std::uint64_t seed);

  std::size_t count() const { return count_; }
  ImuSample next();

  const Vec3d& gyro_bias_truth() const { return gyro_bias_; }
  const Vec3d& accel_bias_truth() const { return accel_bias_; }

 private:
  const TrajectoryModel* model_;
  double dt_, gyro_sigma_, accel_sigma_, prev_t_ = 0.0;
  std::size_t count_, k_ = 0;
  Vec3d gyro_bias_, accel_bias_;
  GaussianRng rng_;
};

std::vector<GpsFix> synthesize_gps(const TrajectoryModel& model, const SensorSpec& spec,
                                   double rate_hz, std::uint64_t seed);

class OdoSynth {
 public:
  OdoSynth(const TrajectoryModel& model, const SensorSpec& spec, double rate_hz,
           std::uint64_t seed);

  std::size_t count() const { return count_; }
  OdoSample next();

 private:
  const TrajectoryModel* model_;
  double dt_, scale_std_;
  std::size_t count_, j_ = 0;
  GaussianRng rng_;
};

// Attitude perturbation from three independent Gaussian Euler draws
// (pitch, roll, yaw argument order; composed as Rz(yaw) Ry(pitch) Rx(roll)).
Mat3d random_misalignment(double std_pitch, double std_roll, double std_yaw,
                          std::uint64_t seed);

}  // namespace se23nav
