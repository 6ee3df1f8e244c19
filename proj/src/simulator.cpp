#include "se23nav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace se23nav {

double GaussianRng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;       // [0, 1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Vec3d GaussianRng::normal3() {
  Vec3d v;
  v.x() = normal();
  v.y() = normal();
  v.z() = normal();
  return v;
}

std::uint64_t GaussianRng::splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t run_seed, std::uint64_t tag) {
  return GaussianRng::splitmix64(run_seed ^ GaussianRng::splitmix64(tag));
}

Mat3d euler_zyx_to_rot(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3d::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3d::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3d::UnitX()))
      .toRotationMatrix();
}

Vec3d rot_to_euler_zyx(const Mat3d& C, bool* gimbal) {
  const double s = std::clamp(-C(2, 0), -1.0, 1.0);
  const double pitch = std::asin(s);
  if (gimbal) *gimbal = std::abs(pitch) > 89.0 * std::numbers::pi / 180.0;
  return Vec3d(std::atan2(C(2, 1), C(2, 2)), pitch, std::atan2(C(1, 0), C(0, 0)));
}

TrajectoryModel::TrajectoryModel(std::vector<MotionSegment> profile, const Geodetic& origin,
                                 const EarthModel& em)
    : em_(em) {
  if (profile.empty()) throw std::invalid_argument("motion profile is empty");
  C_ne_ = ecef_to_ned_rotation(origin).transpose();
  p0_ecef_ = geodetic_to_ecef(origin, em);

  double t = 0.0, psi = 0.0, speed = 0.0, north = 0.0, east = 0.0;
  segments_.reserve(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const MotionSegment& seg = profile[i];
    const std::string where = "segment " + std::to_string(i) + ": ";
    if (!(seg.duration > 0.0)) throw std::invalid_argument(where + "duration must be positive");
    if (seg.w.x() != 0.0 || seg.w.y() != 0.0 || seg.a.z() != 0.0)
      throw std::invalid_argument(
          where + "only yaw rate and longitudinal acceleration are supported (planar model)");

    SegmentState st{t, psi, speed, north, east, -seg.w.z(), seg.a.y()};
    segments_.push_back(st);

    const double s_end = speed + st.accel * seg.duration;
    if (std::min(speed, s_end) < -1e-9)
      throw std::invalid_argument(where + "speed becomes negative");

    // advance the planar state to the segment end in closed form
    const double c = st.yaw_rate, b = st.accel, tau = seg.duration;
    std::complex<double> dpos;
    const std::complex<double> eipsi(std::cos(psi), std::sin(psi));
    if (c == 0.0) {
      dpos = eipsi * (speed * tau + 0.5 * b * tau * tau);
    } else {
      const std::complex<double> ic(0.0, c);
      const std::complex<double> eict(std::cos(c * tau), std::sin(c * tau));
      dpos = eipsi * (((speed + b * tau) * eict - speed) / ic - b * (eict - 1.0) / (ic * ic));
    }
    north += dpos.real();
    east += dpos.imag();
    psi += c * tau;
    speed = s_end;
    t += seg.duration;
  }
  total_duration_ = t;
}

const TrajectoryModel::SegmentState& TrajectoryModel::segment_at(double t, double* tau) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t + 1e-9,
                             [](double v, const SegmentState& s) { return v < s.t0; });
  if (it != segments_.begin()) --it;
  *tau = std::max(0.0, t - it->t0);
  return *it;
}

void TrajectoryModel::planar_at(double t, double* psi, double* speed, double* north,
                                double* east, double* vdot_n, double* vdot_e) const {
  double tau = 0.0;
  const SegmentState& st = segment_at(t, &tau);
  const double c = st.yaw_rate, b = st.accel;
  const double ps = st.psi + c * tau;
  const double sp = st.speed + b * tau;

  const std::complex<double> eipsi(std::cos(st.psi), std::sin(st.psi));
  std::complex<double> dpos;
  if (c == 0.0) {
    dpos = eipsi * (st.speed * tau + 0.5 * b * tau * tau);
  } else {
    const std::complex<double> ic(0.0, c);
    const std::complex<double> eict(std::cos(c * tau), std::sin(c * tau));
    dpos = eipsi * (((st.speed + b * tau) * eict - st.speed) / ic - b * (eict - 1.0) / (ic * ic));
  }
  *psi = ps;
  *speed = sp;
  *north = st.north + dpos.real();
  *east = st.east + dpos.imag();
  if (vdot_n || vdot_e) {
    const std::complex<double> acc =
        std::complex<double>(b, sp * c) * std::complex<double>(std::cos(ps), std::sin(ps));
    if (vdot_n) *vdot_n = acc.real();
    if (vdot_e) *vdot_e = acc.imag();
  }
}

double TrajectoryModel::speed_at(double t) const {
  double tau = 0.0;
  const SegmentState& st = segment_at(t, &tau);
  return st.speed + st.accel * tau;
}

NavState TrajectoryModel::nav_at(double t) const {
  double psi, speed, north, east;
  planar_at(t, &psi, &speed, &north, &east, nullptr, nullptr);
  NavState nav;
  nav.C = C_ne_ * Eigen::AngleAxisd(psi, Vec3d::UnitZ()).toRotationMatrix();
  nav.v = C_ne_ * Vec3d(speed * std::cos(psi), speed * std::sin(psi), 0.0);
  nav.p = p0_ecef_ + C_ne_ * Vec3d(north, east, 0.0);
  return nav;
}

Vec3d TrajectoryModel::body_rate_at(double t) const {
  double tau = 0.0;
  const SegmentState& st = segment_at(t, &tau);
  const double psi = st.psi + st.yaw_rate * tau;
  const Mat3d C = C_ne_ * Eigen::AngleAxisd(psi, Vec3d::UnitZ()).toRotationMatrix();
  return Vec3d(0.0, 0.0, st.yaw_rate) + C.transpose() * em_.omega_ie();
}

Vec3d TrajectoryModel::specific_force_at(double t) const {
  double psi, speed, north, east, vdot_n, vdot_e;
  planar_at(t, &psi, &speed, &north, &east, &vdot_n, &vdot_e);
  const Mat3d C = C_ne_ * Eigen::AngleAxisd(psi, Vec3d::UnitZ()).toRotationMatrix();
  const Vec3d v = C_ne_ * Vec3d(speed * std::cos(psi), speed * std::sin(psi), 0.0);
  const Vec3d p = p0_ecef_ + C_ne_ * Vec3d(north, east, 0.0);
  const Vec3d a_e = C_ne_ * Vec3d(vdot_n, vdot_e, 0.0);
  const Vec3d w = em_.omega_ie();
  return C.transpose() * (a_e + 2.0 * w.cross(v) + w.cross(w.cross(p)) - gravitation(p, em_));
}

TruthSample TrajectoryModel::sample(double t) const {
  TruthSample s;
  s.t = t;
  s.nav = nav_at(t);
  s.body_rate = body_rate_at(t);
  s.specific_force = specific_force_at(t);
  return s;
}

namespace {

Vec3d random_unit(GaussianRng& rng) {
  const Vec3d v = rng.normal3();
  const double n = v.norm();
  return n > 1e-12 ? Vec3d(v / n) : Vec3d::UnitX();
}

}  // namespace

ImuSynth::ImuSynth(const TrajectoryModel& model, const SensorSpec& spec, double dt,
                   std::uint64_t seed)
    : model_(&model), dt_(dt), rng_(seed) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("IMU dt must lie in (0, 0.1]");
  count_ = static_cast<std::size_t>(std::llround(model.duration() / dt));
  gyro_sigma_ = spec.gyro_arw / std::sqrt(dt);
  accel_sigma_ = spec.accel_vrw / std::sqrt(dt);
  gyro_bias_ = spec.gyro_bias * random_unit(rng_);
  accel_bias_ = spec.accel_bias * random_unit(rng_);
}

ImuSample ImuSynth::next() {
  k_ += 1;
  const double t = static_cast<double>(k_) * dt_;
  const double tmid = (static_cast<double>(k_) - 0.5) * dt_;
  ImuSample u;
  u.t = t;
  u.dt = t - prev_t_;
  prev_t_ = t;
  u.gyro = model_->body_rate_at(tmid) + gyro_bias_ + gyro_sigma_ * rng_.normal3();
  u.accel = model_->specific_force_at(tmid) + accel_bias_ + accel_sigma_ * rng_.normal3();
  return u;
}

std::vector<GpsFix> synthesize_gps(const TrajectoryModel& model, const SensorSpec& spec,
                                   double rate_hz, std::uint64_t seed) {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("GPS rate must be positive");
  GaussianRng rng(seed);
  const EarthModel& em = model.earth();
  const auto epochs = static_cast<std::size_t>(std::floor(model.duration() * rate_hz + 1e-9));
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;

  std::vector<GpsFix> out;
  out.reserve(epochs);
  for (std::size_t n = 1; n <= epochs; ++n) {
    const double t = static_cast<double>(n) / rate_hz;
    const NavState nav = model.nav_at(t);
    const Geodetic g = ecef_to_geodetic(nav.p, em);
    const Vec3d vned = ecef_to_ned_rotation(g) * nav.v;
    const Vec3d np = spec.gps_pos_std * rng.normal3();  // north, east, down (m)
    const Vec3d nv = spec.gps_vel_std * rng.normal3();

    GpsFix fix;
    fix.t = t;
    fix.lat_deg = (g.lat + np.x() / (meridian_radius(g.lat, em) + g.h)) * kRadToDeg;
    fix.lon_deg =
        (g.lon + np.y() / ((normal_radius(g.lat, em) + g.h) * std::cos(g.lat))) * kRadToDeg;
    fix.h_m = g.h - np.z();
    fix.vn = vned.x() + nv.x();
    fix.ve = vned.y() + nv.y();
    fix.vd = vned.z() + nv.z();
    out.push_back(fix);
  }
  return out;
}

OdoSynth::OdoSynth(const TrajectoryModel& model, const SensorSpec& spec, double rate_hz,
                   std::uint64_t seed)
    : model_(&model), scale_std_(spec.odo_scale_std), rng_(seed) {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("odometer rate must be positive");
  dt_ = 1.0 / rate_hz;
  count_ = static_cast<std::size_t>(std::llround(model.duration() * rate_hz));
}

OdoSample OdoSynth::next() {
  j_ += 1;
  OdoSample s;
  s.t = static_cast<double>(j_) * dt_;
  s.v_forward = model_->speed_at(s.t) * (1.0 + scale_std_ * rng_.normal());
  return s;
}

Mat3d random_misalignment(double std_pitch, double std_roll, double std_yaw,
                          std::uint64_t seed) {
  GaussianRng rng(seed);
  const double dpitch = std_pitch * rng.normal();
  const double droll = std_roll * rng.normal();
  const double dyaw = std_yaw * rng.normal();
  return euler_zyx_to_rot(droll, dpitch, dyaw);
}

}  // namespace se23nav
