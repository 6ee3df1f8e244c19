#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "se23nav/simulator.hpp"

using namespace se23nav;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
const EarthModel em;
const Geodetic kOrigin{28.2 * kDeg, 112.98 * kDeg, 60.0};

MotionSegment seg(double duration, double wz_dps = 0.0, double ay = 0.0) {
  MotionSegment s;
  s.duration = duration;
  s.w.z() = wz_dps * kDeg;
  s.a.y() = ay;
  return s;
}

// short mixed drive: accelerate, cruise, figure-of-S, brake
std::vector<MotionSegment> drive_profile() {
  return {seg(60.0),          seg(10.0, 0.0, 1.0), seg(100.0),
          seg(100.0, 0.9),    seg(50.0),           seg(100.0, -0.9),
          seg(50.0),          seg(10.0, 0.0, -1.0), seg(20.0)};
}

double heading_at(const TrajectoryModel& m, double t) {
  const Mat3d C_nb = m.C_ne().transpose() * m.nav_at(t).C;
  return rot_to_euler_zyx(C_nb).z();
}

}  // namespace

TEST_CASE("gaussian source is deterministic with sound moments") {
  GaussianRng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const double va = a.normal();
    CHECK(va == b.normal());
    if (i == 0) CHECK(va != c.normal());
  }
  GaussianRng rng(7);
  double sum = 0.0, sumsq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(sumsq / n - mean * mean - 1.0) < 0.01);
}

TEST_CASE("substreams derived from one run seed are distinct and stable") {
  const std::uint64_t run_seed = 42;
  CHECK(substream_seed(run_seed, kTagImu) == substream_seed(run_seed, kTagImu));
  CHECK(substream_seed(run_seed, kTagImu) != substream_seed(run_seed, kTagGps));
  CHECK(substream_seed(run_seed, kTagGps) != substream_seed(run_seed, kTagOdo));
  CHECK(substream_seed(run_seed, kTagImu) != substream_seed(run_seed + 1, kTagImu));
}

TEST_CASE("euler conversions roundtrip away from the gimbal singularity") {
  GaussianRng rng(71);
  for (int i = 0; i < 1000; ++i) {
    const double roll = 3.0 * rng.normal();
    const double pitch = 1.2 * rng.normal();
    const double yaw = 3.0 * rng.normal();
    if (std::abs(pitch) > 1.4) continue;
    bool gimbal = true;
    const Vec3d e = rot_to_euler_zyx(euler_zyx_to_rot(roll, pitch, yaw), &gimbal);
    CHECK(!gimbal);
    CHECK((euler_zyx_to_rot(e.x(), e.y(), e.z()) - euler_zyx_to_rot(roll, pitch, yaw)).norm() <
          1e-12);
  }
  bool gimbal = false;
  (void)rot_to_euler_zyx(euler_zyx_to_rot(0.1, 89.5 * kDeg, 0.2), &gimbal);
  CHECK(gimbal);
}

TEST_CASE("trajectory construction validates the planar profile") {
  CHECK_THROWS_AS(TrajectoryModel({}, kOrigin, em), std::invalid_argument);
  CHECK_THROWS_AS(TrajectoryModel({seg(0.0)}, kOrigin, em), std::invalid_argument);
  MotionSegment bad = seg(10.0);
  bad.w.x() = 0.01;
  CHECK_THROWS_AS(TrajectoryModel({bad}, kOrigin, em), std::invalid_argument);
  bad = seg(10.0);
  bad.a.z() = 0.5;
  CHECK_THROWS_AS(TrajectoryModel({bad}, kOrigin, em), std::invalid_argument);
  // braking below standstill is rejected
  CHECK_THROWS_AS(TrajectoryModel({seg(10.0, 0.0, 1.0), seg(20.0, 0.0, -1.0)}, kOrigin, em),
                  std::invalid_argument);
  // the ignored centripetal column is accepted
  MotionSegment turn = seg(10.0, 0.9);
  turn.a.x() = 0.157;
  CHECK_NOTHROW(TrajectoryModel({seg(5.0, 0.0, 1.0), turn}, kOrigin, em));
}

TEST_CASE("a static trajectory senses earth rate and reaction to gravity only") {
  const TrajectoryModel m({seg(300.0)}, kOrigin, em);
  CHECK(m.duration() == 300.0);
  for (double t : {0.0, 100.0, 299.5}) {
    const TruthSample s = m.sample(t);
    CHECK(s.nav.v.norm() == 0.0);
    CHECK((s.nav.p - geodetic_to_ecef(kOrigin, em)).norm() == 0.0);
    CHECK(std::abs(s.body_rate.norm() - em.omega) < 1e-18);
    CHECK((s.specific_force + s.nav.C.transpose() * gravity(s.nav.p, em)).norm() < 1e-9);
  }
}

TEST_CASE("a left turn at 0.9 deg/s sweeps exactly 90 degrees of heading in 100 s") {
  const TrajectoryModel m({seg(10.0, 0.0, 1.0), seg(100.0, 0.9), seg(10.0)}, kOrigin, em);
  const double dpsi = heading_at(m, 110.0) - heading_at(m, 10.0);
  // z-up table rate maps to a decreasing z-down heading
  CHECK(std::remainder(dpsi + std::numbers::pi / 2.0, 2.0 * std::numbers::pi) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.speed_at(110.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("acceleration integrates to the closed-form displacement") {
  const TrajectoryModel m({seg(10.0), seg(10.0, 0.0, 1.0), seg(5.0)}, kOrigin, em);
  const Vec3d d = m.C_ne().transpose() * (m.nav_at(20.0).p - m.nav_at(10.0).p);
  CHECK(d.x() == doctest::Approx(50.0).epsilon(1e-12));  // 0.5 * 1 * 10^2 north
  CHECK(std::abs(d.y()) < 1e-9);
  CHECK(std::abs(d.z()) < 1e-9);
  CHECK(m.speed_at(25.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("a full-circle turn returns to its starting point") {
  const TrajectoryModel m({seg(10.0, 0.0, 1.0), seg(400.0, 0.9), seg(10.0)}, kOrigin, em);
  CHECK((m.nav_at(410.0).p - m.nav_at(10.0).p).norm() < 1e-6);
  // the heading has swept a full 2*pi, which wraps back onto itself
  CHECK(std::abs(std::remainder(heading_at(m, 410.0) - heading_at(m, 10.0),
                                2.0 * std::numbers::pi)) < 1e-9);
}

TEST_CASE("noise-free IMU synthesis samples the ideal signals mid-interval") {
  const TrajectoryModel m(drive_profile(), kOrigin, em);
  ImuSynth synth(m, SensorSpec{}, 0.01, 99);
  CHECK(synth.count() == 50000);
  CHECK(synth.gyro_bias_truth().norm() == 0.0);
  for (std::size_t k = 1; k <= 2000; ++k) {
    const ImuSample u = synth.next();
    const double tmid = (static_cast<double>(k) - 0.5) * 0.01;
    CHECK(u.t == static_cast<double>(k) * 0.01);
    CHECK(u.dt == doctest::Approx(0.01).epsilon(1e-9));
    CHECK((u.gyro - m.body_rate_at(tmid)).norm() == 0.0);
    CHECK((u.accel - m.specific_force_at(tmid)).norm() == 0.0);
  }
}

TEST_CASE("IMU noise scales as white noise sampled at the IMU rate") {
  const TrajectoryModel m({seg(1200.0)}, kOrigin, em);
  SensorSpec spec;
  spec.gyro_arw = 1e-3;  // rad/sqrt(s) -> sigma = 1e-2 at 100 Hz
  ImuSynth synth(m, spec, 0.01, 123);
  const Vec3d ideal = m.body_rate_at(0.005);  // static: constant ideal signal
  double sumsq = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const ImuSample u = synth.next();
    sumsq += (u.gyro - ideal).squaredNorm();
  }
  const double var = sumsq / (3.0 * n);
  CHECK(std::abs(var / 1e-4 - 1.0) < 0.05);
}

TEST_CASE("IMU biases have the specified magnitude and a random direction") {
  const TrajectoryModel m({seg(10.0)}, kOrigin, em);
  SensorSpec spec;
  spec.gyro_bias = 1e-4;
  spec.accel_bias = 2e-3;
  ImuSynth a(m, spec, 0.01, 5), b(m, spec, 0.01, 6);
  CHECK(a.gyro_bias_truth().norm() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(a.accel_bias_truth().norm() == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK((a.gyro_bias_truth() - b.gyro_bias_truth()).norm() > 1e-6);
  // with noise off, every sample carries the bias up to one rounding of the sum
  const ImuSample u = a.next();
  CHECK((u.gyro - m.body_rate_at(0.005) - a.gyro_bias_truth()).norm() < 1e-15);
}

TEST_CASE("noise-free GPS reports the truth at exact epochs") {
  const TrajectoryModel m(drive_profile(), kOrigin, em);
  const std::vector<GpsFix> fixes = synthesize_gps(m, SensorSpec{}, 1.0, 17);
  CHECK(fixes.size() == 500);
  for (std::size_t i = 0; i < fixes.size(); i += 37) {
    const GpsFix& f = fixes[i];
    CHECK(f.t == static_cast<double>(i + 1));
    const NavState nav = m.nav_at(f.t);
    const Geodetic g{f.lat_deg * kDeg, f.lon_deg * kDeg, f.h_m};
    CHECK((geodetic_to_ecef(g, em) - nav.p).norm() < 1e-6);
    const Vec3d vned = ecef_to_ned_rotation(ecef_to_geodetic(nav.p, em)) * nav.v;
    CHECK((Vec3d(f.vn, f.ve, f.vd) - vned).norm() == 0.0);
  }
}

TEST_CASE("GPS noise matches the configured standard deviations") {
  const TrajectoryModel m({seg(1000.0)}, kOrigin, em);
  SensorSpec spec;
  spec.gps_vel_std = 0.1;
  spec.gps_pos_std = 10.0;
  const std::vector<GpsFix> fixes = synthesize_gps(m, spec, 1.0, 101);
  const NavState nav = m.nav_at(1.0);  // static: truth is epoch-independent
  const Geodetic g = ecef_to_geodetic(nav.p, em);
  const Vec3d vned = ecef_to_ned_rotation(g) * nav.v;

  double vel_sumsq = 0.0, pos_sumsq = 0.0;
  for (const GpsFix& f : fixes) {
    vel_sumsq += (Vec3d(f.vn, f.ve, f.vd) - vned).squaredNorm();
    const double dn = (f.lat_deg * kDeg - g.lat) * (meridian_radius(g.lat, em) + g.h);
    const double de =
        (f.lon_deg * kDeg - g.lon) * (normal_radius(g.lat, em) + g.h) * std::cos(g.lat);
    const double dd = g.h - f.h_m;
    pos_sumsq += dn * dn + de * de + dd * dd;
  }
  const double n3 = 3.0 * static_cast<double>(fixes.size());
  CHECK(std::abs(std::sqrt(vel_sumsq / n3) / 0.1 - 1.0) < 0.1);
  CHECK(std::abs(std::sqrt(pos_sumsq / n3) / 10.0 - 1.0) < 0.1);
}

TEST_CASE("odometer output is exactly zero at standstill and scales with speed") {
  SensorSpec spec;
  spec.odo_scale_std = 0.01;
  const TrajectoryModel still({seg(10.0)}, kOrigin, em);
  OdoSynth at_rest(still, spec, 125.0, 3);
  CHECK(at_rest.count() == 1250);
  for (int i = 0; i < 100; ++i) CHECK(at_rest.next().v_forward == 0.0);

  const TrajectoryModel cruise({seg(10.0, 0.0, 1.0), seg(80.0)}, kOrigin, em);
  OdoSynth noisy(cruise, spec, 125.0, 4);
  double sumsq = 0.0;
  int n = 0;
  for (std::size_t j = 1; j <= noisy.count(); ++j) {
    const OdoSample s = noisy.next();
    if (s.t <= 10.0) continue;
    sumsq += std::pow(s.v_forward - 10.0, 2);
    n += 1;
  }
  CHECK(std::abs(std::sqrt(sumsq / n) / 0.1 - 1.0) < 0.1);

  OdoSynth clean(cruise, SensorSpec{}, 125.0, 5);
  for (int j = 0; j < 1250; ++j) (void)clean.next();
  CHECK(clean.next().v_forward == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("random misalignment honors its stds, seed, and composition order") {
  CHECK((random_misalignment(0.0, 0.0, 0.0, 9) - Mat3d::Identity()).norm() == 0.0);
  CHECK((random_misalignment(0.1, 0.2, 0.5, 9) - random_misalignment(0.1, 0.2, 0.5, 9))
            .norm() == 0.0);
  CHECK((random_misalignment(0.1, 0.2, 0.5, 9) - random_misalignment(0.1, 0.2, 0.5, 10))
            .norm() > 1e-3);
  const double sigma = 0.1;
  double sumsq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Mat3d C = random_misalignment(0.0, 0.0, sigma, 1000 + i);
    sumsq += std::pow(rot_to_euler_zyx(C).z(), 2);
  }
  CHECK(std::abs(std::sqrt(sumsq / n) / sigma - 1.0) < 0.03);
}

TEST_CASE("ideal IMU re-propagated through the strapdown step reproduces the truth") {
  const TrajectoryModel m(drive_profile(), kOrigin, em);
  ImuSynth synth(m, SensorSpec{}, 0.01, 55);
  TransformedNavState est = to_transformed(m.nav_at(0.0), em);
  double worst_pos = 0.0, worst_vel = 0.0;
  for (std::size_t k = 1; k <= synth.count(); ++k) {
    est = propagate(est, synth.next(), em);
    if (k % 5000 == 0) {
      const NavState truth = m.nav_at(static_cast<double>(k) * 0.01);
      const NavState got = from_transformed(est, em);
      worst_pos = std::max(worst_pos, (got.p - truth.p).norm());
      worst_vel = std::max(worst_vel, (got.v - truth.v).norm());
    }
  }
  CHECK(worst_pos < 1e-3);
  CHECK(worst_vel < 1e-5);
}
