#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "se23nav/error_models.hpp"
#include "se23nav/harness.hpp"

namespace se23nav {
namespace {

constexpr double kDeg = M_PI / 180.0;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RefSample ref_from_truth(double t, const NavState& nav, const EarthModel& em) {
  RefSample r;
  r.t = t;
  const Geodetic g = ecef_to_geodetic(nav.p, em);
  const Mat3d C_en = ecef_to_ned_rotation(g);
  const Vec3d v_ned = C_en * nav.v;
  const Vec3d rpy = rot_to_euler_zyx(C_en * nav.C);
  r.lat_deg = g.lat / kDeg;
  r.lon_deg = g.lon / kDeg;
  r.h_m = g.h;
  r.vn = v_ned.x();
  r.ve = v_ned.y();
  r.vd = v_ned.z();
  r.roll_deg = rpy.x() / kDeg;
  r.pitch_deg = rpy.y() / kDeg;
  r.yaw_deg = rpy.z() / kDeg;
  return r;
}

Vec3d attitude_error_angles(const Mat3d& est_Cbe, const Mat3d& truth_Cbe, const Geodetic& at,
                            bool* gimbal) {
  const Mat3d C_en = ecef_to_ned_rotation(at);
  const Vec3d rpy = rot_to_euler_zyx((C_en * est_Cbe) * (C_en * truth_Cbe).transpose(), gimbal);
  return Vec3d(rpy.y(), rpy.x(), rpy.z()) / kDeg;  // (pitch, roll, yaw)
}

FilterConfig make_filter_config(const Scenario& sc, ErrorDef def) {
  FilterConfig cfg;
  cfg.def = def;
  cfg.init_attitude_std = sc.cov_att_std;
  cfg.init_vel_std = Vec3d::Constant(sc.init_vel_std);
  cfg.init_pos_std = Vec3d::Constant(sc.init_pos_std);
  cfg.noise.gyro_psd = Vec3d::Constant(sc.sensors.gyro_arw);
  cfg.noise.accel_psd = Vec3d::Constant(sc.sensors.accel_vrw);
  cfg.noise.gyro_bias_std = Vec3d::Constant(sc.sensors.gyro_bias);
  cfg.noise.accel_bias_std = Vec3d::Constant(sc.sensors.accel_bias);
  cfg.gps_vel_std = sc.sensors.gps_vel_std;
  cfg.gps_pos_std = sc.sensors.gps_pos_std;
  cfg.odo_scale_std = sc.sensors.odo_scale_std;
  return cfg;
}

MeasurementModel build_gps_measurement(const FilterState& st, const GpsFix& fix,
                                       const FilterConfig& cfg, const EarthModel& em) {
  const Geodetic g{fix.lat_deg * kDeg, fix.lon_deg * kDeg, fix.h_m};
  const Mat3d C_ne = ecef_to_ned_rotation(g).transpose();
  const Vec3d p_fix = geodetic_to_ecef(g, em);
  const Vec3d v_fix = C_ne * Vec3d(fix.vn, fix.ve, fix.vd);
  // Per-axis stds are isotropic, so the NED covariances equal their ECEF images.
  const Mat3d R_v = (cfg.gps_vel_std * cfg.gps_vel_std) * Mat3d::Identity();
  const Mat3d R_p = (cfg.gps_pos_std * cfg.gps_pos_std) * Mat3d::Identity();
  if (cfg.def == ErrorDef::so) return h_gps_so(st.classic(em), v_fix, p_fix, R_v, R_p);
  const Mat3d wx = skew(em.omega_ie());
  const Vec3d y = v_fix + wx * p_fix;
  const Mat3d R_y = R_v + wx * R_p * wx.transpose();
  if (cfg.def == ErrorDef::right) return h_gps_right(st.transformed(em), y, R_y);
  return h_gps_left(st.transformed(em), y, R_y);
}

MeasurementModel build_odo_measurement(const FilterState& st, double v_forward, int n_avg,
                                       const FilterConfig& cfg, const EarthModel& em) {
  const Vec3d v_b(v_forward, 0.0, 0.0);
  const double fwd = std::max(cfg.odo_scale_std * std::abs(v_forward), cfg.odo_vel_floor);
  Mat3d R_b = Mat3d::Zero();
  R_b(0, 0) = fwd * fwd / std::max(n_avg, 1);
  R_b(1, 1) = R_b(2, 2) = cfg.odo_lateral_std * cfg.odo_lateral_std;
  switch (cfg.def) {
    case ErrorDef::right: return h_odo_right(st.transformed(em), v_b, R_b, em);
    case ErrorDef::left: return h_odo_left(st.transformed(em), v_b, R_b, em);
    case ErrorDef::so: break;
  }
  return h_odo_so(st.classic(em), v_b, R_b);
}

OdoDecimator::OdoDecimator(double odo_rate, double update_rate)
    : odo_rate_(odo_rate), update_rate_(update_rate) {
  if (!(odo_rate > 0.0) || !(update_rate > 0.0) || odo_rate < update_rate)
    throw std::invalid_argument("odometer decimator: need odo_rate >= update_rate > 0");
}

std::optional<OdoDecimator::Window> OdoDecimator::push(const OdoSample& s) {
  ++j_;
  acc_ += s.v_forward;
  const auto j_hi = static_cast<std::size_t>(
      std::floor(static_cast<double>(m_) * odo_rate_ / update_rate_ + 1e-9));
  if (j_ < j_hi) return std::nullopt;
  Window w;
  w.t = static_cast<double>(m_) / update_rate_;
  w.n = static_cast<int>(j_ - window_start_);
  w.v_forward = acc_ / static_cast<double>(w.n);
  window_start_ = j_;
  acc_ = 0.0;
  ++m_;
  return w;
}

TrajectoryModel scenario_model(const Scenario& sc) {
  return TrajectoryModel(sc.profile, sc.origin, EarthModel{});
}

std::vector<ImuSample> make_imu_stream(const Scenario& sc, const TrajectoryModel& model,
                                       int run) {
  const std::uint64_t seed_r = sc.seed + static_cast<std::uint64_t>(run);
  ImuSynth synth(model, sc.sensors, sc.imu_dt, substream_seed(seed_r, kTagImu));
  std::vector<ImuSample> out;
  out.reserve(synth.count());
  for (std::size_t k = 0; k < synth.count(); ++k) out.push_back(synth.next());
  return out;
}

std::vector<GpsFix> make_gps_stream(const Scenario& sc, const TrajectoryModel& model, int run) {
  const std::uint64_t seed_r = sc.seed + static_cast<std::uint64_t>(run);
  return synthesize_gps(model, sc.sensors, sc.gps_rate, substream_seed(seed_r, kTagGps));
}

std::vector<OdoSample> make_odo_stream(const Scenario& sc, const TrajectoryModel& model,
                                       int run) {
  const std::uint64_t seed_r = sc.seed + static_cast<std::uint64_t>(run);
  OdoSynth synth(model, sc.sensors, sc.odo_rate, substream_seed(seed_r, kTagOdo));
  std::vector<OdoSample> out;
  out.reserve(synth.count());
  for (std::size_t j = 0; j < synth.count(); ++j) out.push_back(synth.next());
  return out;
}

std::vector<RefSample> make_ref_stream(const Scenario& sc, const TrajectoryModel& model) {
  const long long count = std::llround(model.duration() / sc.imu_dt);
  const long long every = std::max(1LL, std::llround(sc.record_dt / sc.imu_dt));
  std::vector<RefSample> out;
  out.reserve(static_cast<std::size_t>(count / every) + 2);
  for (long long k = 0; k <= count; ++k) {
    if (k % every != 0 && k != count) continue;
    const double t = static_cast<double>(k) * sc.imu_dt;
    out.push_back(ref_from_truth(t, model.nav_at(t), model.earth()));
  }
  return out;
}

namespace {

EpochRecord make_record(const FilterState& st, const RefSample& ref, const EarthModel& em) {
  EpochRecord rec;
  rec.t = ref.t;
  const Geodetic gr{ref.lat_deg * kDeg, ref.lon_deg * kDeg, ref.h_m};
  const Mat3d C_bn_ref =
      euler_zyx_to_rot(ref.roll_deg * kDeg, ref.pitch_deg * kDeg, ref.yaw_deg * kDeg);
  const Mat3d C_en = ecef_to_ned_rotation(gr);
  bool gimbal = false;
  const Vec3d rpy = rot_to_euler_zyx((C_en * st.C) * C_bn_ref.transpose(), &gimbal);
  rec.err_roll_deg = rpy.x() / kDeg;
  rec.err_pitch_deg = rpy.y() / kDeg;
  rec.err_yaw_deg = rpy.z() / kDeg;
  rec.gimbal = gimbal;

  const NavState est = st.classic(em);
  const Geodetic ge = ecef_to_geodetic(est.p, em);
  rec.err_lat_m = (ge.lat - gr.lat) * (meridian_radius(gr.lat, em) + gr.h);
  rec.err_lon_m = (ge.lon - gr.lon) * (normal_radius(gr.lat, em) + gr.h) * std::cos(gr.lat);
  rec.err_h_m = ge.h - gr.h;
  const Vec3d v_ned = C_en * est.v;
  rec.err_vn = v_ned.x() - ref.vn;
  rec.err_ve = v_ned.y() - ref.ve;
  rec.err_vd = v_ned.z() - ref.vd;
  rec.gyro_bias = st.gyro_bias;
  rec.accel_bias = st.accel_bias;
  return rec;
}

}  // namespace

RunResult run_filter_on_data(const Scenario& sc, ErrorDef def, int run,
                             const std::vector<ImuSample>& imu, const std::vector<GpsFix>& gps,
                             const std::vector<OdoSample>& odo,
                             const std::vector<RefSample>& ref) {
  if (imu.empty()) throw std::runtime_error("run: IMU stream is empty");
  if (ref.empty()) throw std::runtime_error("run: reference stream is empty");
  if (ref.front().t != 0.0) throw std::runtime_error("run: reference stream must start at t = 0");

  const EarthModel em;
  const std::uint64_t seed_r = sc.seed + static_cast<std::uint64_t>(run);
  const RefSample& r0 = ref.front();

  // Truth at t = 0 reconstructed from the reference sample, so the in-memory and
  // replay paths start from identical numbers.
  const Geodetic g0{r0.lat_deg * kDeg, r0.lon_deg * kDeg, r0.h_m};
  const Mat3d C_ne0 = ecef_to_ned_rotation(g0).transpose();
  const Vec3d p_truth = geodetic_to_ecef(g0, em);
  const Vec3d v_truth = C_ne0 * Vec3d(r0.vn, r0.ve, r0.vd);
  const Mat3d C_bn_truth =
      euler_zyx_to_rot(r0.roll_deg * kDeg, r0.pitch_deg * kDeg, r0.yaw_deg * kDeg);

  const Mat3d R_mis =
      sc.random_attitude
          ? random_misalignment(sc.init_att_draw_std.y(), sc.init_att_draw_std.x(),
                                sc.init_att_draw_std.z(), substream_seed(seed_r, kTagInit))
          : euler_zyx_to_rot(sc.init_att_error.x(), sc.init_att_error.y(),
                             sc.init_att_error.z());
  GaussianRng nav_rng(substream_seed(seed_r, kTagInitNav));
  NavState nav0;
  nav0.C = C_ne0 * (R_mis * C_bn_truth);
  nav0.v = v_truth + C_ne0 * (sc.init_vel_std * nav_rng.normal3());
  nav0.p = p_truth + C_ne0 * (sc.init_pos_std * nav_rng.normal3());

  const FilterConfig cfg = make_filter_config(sc, def);
  FilterState st = init_filter(cfg, nav0, 0.0, em);

  RunResult rr;
  rr.def = def;
  rr.run = run;
  rr.epochs.reserve(ref.size());

  const double half = 0.5 * sc.imu_dt;
  std::size_t ref_idx = 0;
  if (std::abs(ref[ref_idx].t) <= half) {
    rr.epochs.push_back(make_record(st, ref[ref_idx], em));
    ++ref_idx;
  }

  std::size_t gps_idx = 0, odo_idx = 0;
  OdoDecimator dec(sc.odo_rate, sc.odo_update_rate);
  std::optional<OdoDecimator::Window> pending;

  for (const ImuSample& u : imu) {
    propagate_filter(st, u, cfg, em);

    if (sc.aiding == AidingType::gps) {
      while (gps_idx < gps.size() && gps[gps_idx].t <= st.t + half) {
        feedback(st, update_filter(st, build_gps_measurement(st, gps[gps_idx], cfg, em)));
        ++gps_idx;
      }
    } else {
      while (odo_idx < odo.size() && odo[odo_idx].t <= st.t + half) {
        if (auto w = dec.push(odo[odo_idx])) pending = w;
        ++odo_idx;
      }
      if (pending && pending->t <= st.t + half) {
        feedback(st, update_filter(st, build_odo_measurement(st, pending->v_forward,
                                                             pending->n, cfg, em)));
        pending.reset();
      }
    }

    while (ref_idx < ref.size() && ref[ref_idx].t <= st.t + half) {
      rr.epochs.push_back(make_record(st, ref[ref_idx], em));
      ++ref_idx;
    }
  }
  rr.hygiene = st.hygiene;
  return rr;
}

std::vector<RunResult> run_scenario(const Scenario& sc) {
  const TrajectoryModel model = scenario_model(sc);
  const std::vector<RefSample> ref = make_ref_stream(sc, model);
  std::vector<RunResult> out;
  out.reserve(static_cast<std::size_t>(sc.runs) * sc.filters.size());
  for (int r = 0; r < sc.runs; ++r) {
    const std::vector<ImuSample> imu = make_imu_stream(sc, model, r);
    const std::vector<GpsFix> gps =
        sc.aiding == AidingType::gps ? make_gps_stream(sc, model, r) : std::vector<GpsFix>{};
    const std::vector<OdoSample> odo = sc.aiding == AidingType::odometer
                                           ? make_odo_stream(sc, model, r)
                                           : std::vector<OdoSample>{};
    for (ErrorDef def : sc.filters) out.push_back(run_filter_on_data(sc, def, r, imu, gps, odo, ref));
  }
  return out;
}

double rms(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += x * x;
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::vector<FilterSummary> summarize(const std::vector<RunResult>& results, double window_s) {
  struct Acc {
    FilterSummary s;
    double ss[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t n = 0;
    bool first = true;
  };
  std::vector<Acc> accs;
  auto acc_for = [&accs](ErrorDef def) -> Acc& {
    for (Acc& a : accs)
      if (a.s.def == def) return a;
    accs.emplace_back();
    accs.back().s.def = def;
    return accs.back();
  };

  for (const RunResult& rr : results) {
    Acc& a = acc_for(rr.def);
    a.s.runs += 1;
    if (a.first) {
      a.s.hygiene = rr.hygiene;
      a.first = false;
    } else {
      FilterHygiene& h = a.s.hygiene;
      h.psd_ok = h.psd_ok && rr.hygiene.psd_ok;
      h.worst_eig_ratio = std::min(h.worst_eig_ratio, rr.hygiene.worst_eig_ratio);
      h.max_asymmetry = std::max(h.max_asymmetry, rr.hygiene.max_asymmetry);
      h.max_feedback_residual =
          std::max(h.max_feedback_residual, rr.hygiene.max_feedback_residual);
      h.epochs += rr.hygiene.epochs;
      h.updates += rr.hygiene.updates;
      h.eig_fallbacks += rr.hygiene.eig_fallbacks;
    }
    if (rr.epochs.empty()) continue;
    const double t_min = rr.epochs.back().t - window_s - 1e-9;
    for (const EpochRecord& e : rr.epochs) {
      if (e.t < t_min) continue;
      const double cols[9] = {e.err_pitch_deg, e.err_roll_deg, e.err_yaw_deg,
                              e.err_lat_m,     e.err_lon_m,    e.err_h_m,
                              e.err_vn,        e.err_ve,       e.err_vd};
      for (int i = 0; i < 9; ++i) a.ss[i] += cols[i] * cols[i];
      a.n += 1;
    }
  }

  std::vector<FilterSummary> out;
  out.reserve(accs.size());
  for (Acc& a : accs) {
    const double n = static_cast<double>(std::max<std::size_t>(a.n, 1));
    for (int i = 0; i < 3; ++i) a.s.terminal_att_rms_deg[i] = std::sqrt(a.ss[i] / n);
    for (int i = 0; i < 3; ++i) a.s.terminal_pos_rms_m[i] = std::sqrt(a.ss[3 + i] / n);
    for (int i = 0; i < 3; ++i) a.s.terminal_vel_rms[i] = std::sqrt(a.ss[6 + i] / n);
    a.s.terminal_horiz_pos_rms_m = std::sqrt((a.ss[3] + a.ss[4]) / n);
    out.push_back(a.s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

namespace {

// Matrix exponential by scaling-and-squaring on a plain Taylor series; the
// arguments here are small enough (norms << 1 after scaling) for this to hit
// machine precision.
Mat9d expm9(const Mat9d& A) {
  int s = 0;
  double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) {
    nrm *= 0.5;
    ++s;
  }
  const Mat9d B = A * std::ldexp(1.0, -s);
  Mat9d out = Mat9d::Identity();
  Mat9d term = Mat9d::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = Mat9d((term * B) / static_cast<double>(k));
    out += term;
  }
  for (int i = 0; i < s; ++i) out = Mat9d(out * out);
  return out;
}

Vec3d random_unit(GaussianRng& rng) {
  const Vec3d n = rng.normal3();
  const double l = n.norm();
  return l < 1e-12 ? Vec3d(Vec3d::UnitX()) : Vec3d(n / l);
}

// Truth implied by an estimate and a navigation-error vector: the exact inverse
// of the error definitions.
TransformedNavState truth_with_error_right(const TransformedNavState& est, const Vec9d& e) {
  const Mat3d E = so3_exp(Vec3d(e.head<3>()));
  TransformedNavState t;
  t.C = E * est.C;
  t.tvel = E * est.tvel + e.segment<3>(3);
  t.p = E * est.p + e.tail<3>();
  return t;
}

TransformedNavState truth_with_error_left(const TransformedNavState& est, const Vec9d& e) {
  TransformedNavState t;
  t.C = est.C * so3_exp(Vec3d(e.head<3>()));
  t.tvel = est.tvel + est.C * e.segment<3>(3);
  t.p = est.p + est.C * e.tail<3>();
  return t;
}

NavState truth_with_error_so(const NavState& est, const Vec9d& e) {
  NavState t;
  t.C = so3_exp(Vec3d(e.head<3>())) * est.C;
  t.v = est.v - e.segment<3>(3);
  t.p = est.p - e.tail<3>();
  return t;
}

// d(phi)/dt from an attitude-error trajectory E(t) = exp(phi(t)) with derivative
// Edot: body rate w satisfies Edot = E (w x), and phi_dot = J_l(-phi)^{-1} w.
Vec3d log_rate(const Mat3d& E, const Mat3d& Edot) {
  const Vec3d phi = so3_log(E);
  return left_jacobian_inv(Vec3d(-phi)) * vee(Mat3d(E.transpose() * Edot));
}

// Exact time derivative of the 9-dim navigation error for a (truth, estimate)
// pair where truth = estimate + error and the truth IMU differs by the bias
// error db = (dbg, dba).
Vec9d error_rate_right(const TransformedNavState& est, const ImuSample& u, const Vec9d& e,
                       const Vec6d& db, const EarthModel& em, const Vec3d& gbar) {
  const TransformedNavState tr = truth_with_error_right(est, e);
  ImuSample ut = u;
  ut.gyro -= db.head<3>();
  ut.accel -= db.tail<3>();
  PropagationOptions opt;
  opt.gravitation = gbar;
  const StateDerivative dt_ = transformed_derivative(tr, ut, em, opt);
  const StateDerivative de = transformed_derivative(est, u, em, opt);
  const Mat3d E = tr.C * est.C.transpose();
  const Mat3d Edot = dt_.Cdot * est.C.transpose() + tr.C * de.Cdot.transpose();
  Vec9d g;
  g.head<3>() = log_rate(E, Edot);
  g.segment<3>(3) = dt_.vdot - Edot * est.tvel - E * de.vdot;
  g.tail<3>() = dt_.pdot - Edot * est.p - E * de.pdot;
  return g;
}

Vec9d error_rate_left(const TransformedNavState& est, const ImuSample& u, const Vec9d& e,
                      const Vec6d& db, const EarthModel& em, const Vec3d& gbar) {
  const TransformedNavState tr = truth_with_error_left(est, e);
  ImuSample ut = u;
  ut.gyro -= db.head<3>();
  ut.accel -= db.tail<3>();
  PropagationOptions opt;
  opt.gravitation = gbar;
  const StateDerivative dt_ = transformed_derivative(tr, ut, em, opt);
  const StateDerivative de = transformed_derivative(est, u, em, opt);
  const Mat3d E = est.C.transpose() * tr.C;
  const Mat3d Edot = de.Cdot.transpose() * tr.C + est.C.transpose() * dt_.Cdot;
  Vec9d g;
  g.head<3>() = log_rate(E, Edot);
  g.segment<3>(3) =
      de.Cdot.transpose() * (tr.tvel - est.tvel) + est.C.transpose() * (dt_.vdot - de.vdot);
  g.tail<3>() = de.Cdot.transpose() * (tr.p - est.p) + est.C.transpose() * (dt_.pdot - de.pdot);
  return g;
}

Vec9d error_rate_so(const NavState& est, const ImuSample& u, const Vec9d& e, const Vec6d& db,
                    const EarthModel& em, const Vec3d& gbar) {
  const NavState tr = truth_with_error_so(est, e);
  ImuSample ut = u;
  ut.gyro -= db.head<3>();
  ut.accel -= db.tail<3>();
  PropagationOptions opt;
  opt.gravitation = gbar;
  const StateDerivative dt_ = classic_derivative(tr, ut, em, opt);
  const StateDerivative de = classic_derivative(est, u, em, opt);
  const Mat3d E = tr.C * est.C.transpose();
  const Mat3d Edot = dt_.Cdot * est.C.transpose() + tr.C * de.Cdot.transpose();
  Vec9d g;
  g.head<3>() = log_rate(E, Edot);
  g.segment<3>(3) = de.vdot - dt_.vdot;
  g.tail<3>() = de.pdot - dt_.pdot;
  return g;
}

// Central-difference Jacobian of a vector map over the 15-dim error state.
template <typename Fn>
Eigen::MatrixXd fd_jacobian15(int rows, const Fn& fn, double eps) {
  Eigen::MatrixXd J(rows, 15);
  Eigen::Matrix<double, 15, 1> x = Eigen::Matrix<double, 15, 1>::Zero();
  for (int i = 0; i < 15; ++i) {
    x.setZero();
    x[i] = eps;
    const Eigen::VectorXd fp = fn(x);
    x[i] = -eps;
    const Eigen::VectorXd fm = fn(x);
    J.col(i) = (fp - fm) / (2.0 * eps);
  }
  return J;
}

double max_column_mismatch(const Eigen::MatrixXd& fd, const Eigen::MatrixXd& an) {
  double worst = 0.0;
  for (int i = 0; i < an.cols(); ++i) {
    const double scale = std::max(an.col(i).norm(), 1.0);
    worst = std::max(worst, (fd.col(i) - an.col(i)).norm() / scale);
  }
  return worst;
}

}  // namespace

GroupAffineReport verify_group_affine(int pairs, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const EarthModel em;
  GaussianRng rng(seed);
  GroupAffineReport rep;
  rep.min_classic = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pairs; ++i) {
    auto random_pose = [&rng]() {
      ExtendedPosed x;
      x.rot = so3_exp(Vec3d(1.5 * rng.normal3()));
      x.vel = 200.0 * rng.normal3();
      x.pos = (6.378e6 + 1e4 * rng.normal()) * random_unit(rng);
      return x;
    };
    const ExtendedPosed a = random_pose();
    const ExtendedPosed b = random_pose();
    ImuSample u;
    u.gyro = 0.2 * rng.normal3();
    u.accel = 5.0 * rng.normal3();
    const Vec3d gbar = gravitation(a.pos, em);
    rep.max_transformed =
        std::max(rep.max_transformed,
                 group_affine_residual(a.matrix(), b.matrix(), u, em.omega_ie(), gbar,
                                       DynamicsKind::transformed));
    rep.min_classic =
        std::min(rep.min_classic, group_affine_residual(a.matrix(), b.matrix(), u,
                                                        em.omega_ie(), gbar,
                                                        DynamicsKind::classic));
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

LogLinearityReport verify_log_linearity() {
  const auto t0 = std::chrono::steady_clock::now();
  const EarthModel em;
  const Geodetic origin{28.2 * kDeg, 112.98 * kDeg, 60.0};

  NavState truth0;
  truth0.p = geodetic_to_ecef(origin, em);
  truth0.C = ecef_to_ned_rotation(origin).transpose();
  const TransformedNavState truth0_t = to_transformed(truth0, em);
  const Vec3d gbar = gravitation(truth0.p, em);

  ImuSample u;
  u.dt = 0.01;
  u.gyro = truth0.C.transpose() * em.omega_ie();
  u.accel = -(truth0.C.transpose() * gravity(truth0.p, em));
  PropagationOptions opt;
  opt.gravitation = gbar;

  const double angle = 30.0 * kDeg;
  const int steps = 6000;  // 60 s
  const int check_every = 100;

  LogLinearityReport rep;
  for (int axis = 0; axis < 3; ++axis) {
    const Mat3d E0 = so3_exp(Vec3d(angle * Vec3d::Unit(axis)));

    // Right-invariant error, transformed dynamics. The reference RK4 steps keep
    // integrator truncation out of the way of the property under test (the
    // production trapezoid step leaves micrometer-level defects over 60 s, which
    // matter only because the invariant error can stay small).
    {
      TransformedNavState tr = truth0_t;
      TransformedNavState est = truth0_t;
      est.C = E0.transpose() * truth0_t.C;
      const Mat9d F9 = f_right(est, em, gbar).F.topLeftCorner<9, 9>();
      const Mat9d E1 = expm9(Mat9d(F9 * (u.dt * check_every)));
      Eigen::Matrix<double, 9, 1> xi_lin =
          se23_log(right_error(tr.pose(), est.pose())).vector();
      for (int k = 1; k <= steps; ++k) {
        u.t = k * u.dt;
        tr = propagate_rk4(tr, u, em, opt);
        est = propagate_rk4(est, u, em, opt);
        if (k % check_every == 0) {
          xi_lin = E1 * xi_lin;
          const Eigen::Matrix<double, 9, 1> xi_nl =
              se23_log(right_error(tr.pose(), est.pose())).vector();
          rep.right = std::max(rep.right, (xi_nl - xi_lin).norm() / xi_lin.norm());
        }
      }
    }

    // Left-invariant error, transformed dynamics.
    {
      TransformedNavState tr = truth0_t;
      TransformedNavState est = truth0_t;
      est.C = truth0_t.C * E0.transpose();
      const Mat9d F9 = f_left(u).F.topLeftCorner<9, 9>();
      const Mat9d E1 = expm9(Mat9d(F9 * (u.dt * check_every)));
      Eigen::Matrix<double, 9, 1> xi_lin =
          se23_log(left_error(tr.pose(), est.pose())).vector();
      for (int k = 1; k <= steps; ++k) {
        u.t = k * u.dt;
        tr = propagate_rk4(tr, u, em, opt);
        est = propagate_rk4(est, u, em, opt);
        if (k % check_every == 0) {
          xi_lin = E1 * xi_lin;
          const Eigen::Matrix<double, 9, 1> xi_nl =
              se23_log(left_error(tr.pose(), est.pose())).vector();
          rep.left = std::max(rep.left, (xi_nl - xi_lin).norm() / xi_lin.norm());
        }
      }
    }

    // Additive error on the classic state: not log-linear, mismatch stays large.
    {
      NavState tr = truth0;
      NavState est = truth0;
      est.C = E0.transpose() * truth0.C;
      Eigen::Matrix<double, 9, 1> x_lin = nav_error_so(tr, est);
      Mat9d F_prev = f_so(est, u, em).F.topLeftCorner<9, 9>();
      for (int k = 1; k <= steps; ++k) {
        u.t = k * u.dt;
        tr = propagate_classic_rk4(tr, u, em, opt);
        est = propagate_classic_rk4(est, u, em, opt);
        const Mat9d F_new = f_so(est, u, em).F.topLeftCorner<9, 9>();
        const Mat9d Fdt = Mat9d(0.5 * (F_prev + F_new) * u.dt);
        x_lin = (Mat9d::Identity() + Fdt + Mat9d(0.5 * Fdt * Fdt)) * x_lin;
        F_prev = F_new;
        if (k % check_every == 0) {
          const Eigen::Matrix<double, 9, 1> x_nl = nav_error_so(tr, est);
          rep.so = std::max(rep.so, (x_nl - x_lin).norm() / x_nl.norm());
        }
      }
    }
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

double JacobianReport::max_error() const {
  return std::max({f_right, f_left, f_so, h_gps_right, h_gps_left, h_gps_so, h_odo_right,
                   h_odo_left, h_odo_so});
}

JacobianReport verify_jacobians(int states, std::uint64_t seed) {
  const EarthModel em;
  GaussianRng rng(seed);
  JacobianReport rep;
  const double eps = 1e-5;
  const Mat3d R3 = Mat3d::Identity();

  for (int i = 0; i < states; ++i) {
    TransformedNavState est;
    est.C = so3_exp(Vec3d(1.5 * rng.normal3()));
    est.p = (6.378e6 + 1e4 * rng.normal()) * random_unit(rng);
    est.tvel = 150.0 * rng.normal3() + em.omega_ie().cross(est.p);
    const NavState est_c = from_transformed(est, em);
    ImuSample u;
    u.gyro = 0.1 * rng.normal3();
    u.accel = Vec3d(0.0, 0.0, -9.8) + 3.0 * rng.normal3();
    const Vec3d gbar = gravitation(est.p, em);
    const Mat3d wx = skew(em.omega_ie());

    auto nav_rate = [](auto&& fn) {
      return [fn](const Eigen::Matrix<double, 15, 1>& x) -> Eigen::VectorXd {
        Eigen::VectorXd g(15);
        g << fn(Vec9d(x.head<9>()), Vec6d(x.tail<6>())), Vec6d::Zero();
        return g;
      };
    };

    // Process models.
    rep.f_right = std::max(
        rep.f_right,
        max_column_mismatch(
            fd_jacobian15(15,
                          nav_rate([&](const Vec9d& e, const Vec6d& db) {
                            return error_rate_right(est, u, e, db, em, gbar);
                          }),
                          eps),
            f_right(est, em, gbar).F));
    rep.f_left = std::max(
        rep.f_left,
        max_column_mismatch(fd_jacobian15(15,
                                          nav_rate([&](const Vec9d& e, const Vec6d& db) {
                                            return error_rate_left(est, u, e, db, em, gbar);
                                          }),
                                          eps),
                            f_left(u).F));
    rep.f_so = std::max(
        rep.f_so,
        max_column_mismatch(fd_jacobian15(15,
                                          nav_rate([&](const Vec9d& e, const Vec6d& db) {
                                            return error_rate_so(est_c, u, e, db, em, gbar);
                                          }),
                                          eps),
                            f_so(est_c, u, em).F));

    // Measurement models: z as a function of the error, truth held at
    // estimate + error with noiseless sensors.
    auto meas = [](auto&& fn) {
      return [fn](const Eigen::Matrix<double, 15, 1>& x) -> Eigen::VectorXd {
        return fn(Vec9d(x.head<9>()));
      };
    };

    rep.h_gps_right = std::max(
        rep.h_gps_right,
        max_column_mismatch(fd_jacobian15(3,
                                          meas([&](const Vec9d& e) {
                                            const TransformedNavState tr =
                                                truth_with_error_right(est, e);
                                            return h_gps_right(est, tr.tvel, R3).z;
                                          }),
                                          eps),
                            h_gps_right(est, est.tvel, R3).H));
    rep.h_gps_left = std::max(
        rep.h_gps_left,
        max_column_mismatch(fd_jacobian15(3,
                                          meas([&](const Vec9d& e) {
                                            const TransformedNavState tr =
                                                truth_with_error_left(est, e);
                                            return h_gps_left(est, tr.tvel, R3).z;
                                          }),
                                          eps),
                            h_gps_left(est, est.tvel, R3).H));
    rep.h_gps_so = std::max(
        rep.h_gps_so,
        max_column_mismatch(fd_jacobian15(6,
                                          meas([&](const Vec9d& e) {
                                            const NavState tr = truth_with_error_so(est_c, e);
                                            return h_gps_so(est_c, tr.v, tr.p, R3, R3).z;
                                          }),
                                          eps),
                            h_gps_so(est_c, est_c.v, est_c.p, R3, R3).H));
    rep.h_odo_right = std::max(
        rep.h_odo_right,
        max_column_mismatch(
            fd_jacobian15(3,
                          meas([&](const Vec9d& e) {
                            const TransformedNavState tr = truth_with_error_right(est, e);
                            const Vec3d v_b = tr.C.transpose() * (tr.tvel - wx * tr.p);
                            return h_odo_right(est, v_b, R3, em).z;
                          }),
                          eps),
            h_odo_right(est, est.C.transpose() * (est.tvel - wx * est.p), R3, em).H));
    rep.h_odo_left = std::max(
        rep.h_odo_left,
        max_column_mismatch(
            fd_jacobian15(3,
                          meas([&](const Vec9d& e) {
                            const TransformedNavState tr = truth_with_error_left(est, e);
                            const Vec3d v_b = tr.C.transpose() * (tr.tvel - wx * tr.p);
                            return h_odo_left(est, v_b, R3, em).z;
                          }),
                          eps),
            h_odo_left(est, est.C.transpose() * (est.tvel - wx * est.p), R3, em).H));
    rep.h_odo_so = std::max(
        rep.h_odo_so,
        max_column_mismatch(fd_jacobian15(3,
                                          meas([&](const Vec9d& e) {
                                            const NavState tr = truth_with_error_so(est_c, e);
                                            return h_odo_so(est_c, tr.C.transpose() * tr.v, R3).z;
                                          }),
                                          eps),
                            h_odo_so(est_c, est_c.C.transpose() * est_c.v, R3).H));
  }
  return rep;
}

}  // namespace se23nav
