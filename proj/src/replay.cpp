// CSV log input/output: results emission, replay-log export, and the parsers
// feeding logged data back through the filter stack.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "se23nav/harness.hpp"

namespace se23nav {
namespace {

constexpr char kImuHeader[] = "t,gx,gy,gz,ax,ay,az";
constexpr char kGpsHeader[] = "t,lat_deg,lon_deg,h_m,vn,ve,vd";
constexpr char kOdoHeader[] = "t,v_body_mps";
constexpr char kRefHeader[] = "t,lat_deg,lon_deg,h_m,vn,ve,vd,roll_deg,pitch_deg,yaw_deg";
constexpr char kResultHeader[] =
    "t,err_pitch_deg,err_roll_deg,err_yaw_deg,err_lat_m,err_lon_m,err_h_m,"
    "err_vn,err_ve,err_vd,bgx,bgy,bgz,bax,bay,baz";
constexpr char kSummaryHeader[] =
    "filter,runs,pitch_rms_deg,roll_rms_deg,yaw_rms_deg,lat_rms_m,lon_rms_m,h_rms_m,"
    "vn_rms_mps,ve_rms_mps,vd_rms_mps,horiz_rms_m,psd_ok,worst_eig_ratio,max_asymmetry,"
    "max_feedback_residual,epochs,updates,eig_fallbacks";

// Longest double in %.17g is 24 characters; files written this way parse back to
// the identical bit pattern.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_row(std::ostream& os, const double* vals, int n) {
  for (int i = 0; i < n; ++i) {
    if (i) os << ',';
    os << fmt(vals[i]);
  }
  os << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<std::vector<double>> read_csv(const std::string& path, const char* header,
                                          int cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("replay: cannot open '" + path + "'");
  std::string line;
  auto chomp = [&line] {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  if (!std::getline(in, line)) throw std::runtime_error("replay: '" + path + "' is empty");
  chomp();
  if (line != header)
    throw std::runtime_error("replay: '" + path + "' line 1: expected header \"" +
                             std::string(header) + "\", got \"" + line + "\"");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    chomp();
    if (line.empty()) continue;
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(cols));
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string tok = line.substr(start, comma - start);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("replay: '" + path + "' line " + std::to_string(lineno) +
                                 ": bad number \"" + tok + "\"");
      vals.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(vals.size()) != cols)
      throw std::runtime_error("replay: '" + path + "' line " + std::to_string(lineno) +
                               ": expected " + std::to_string(cols) + " fields, got " +
                               std::to_string(vals.size()));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("replay: '" + path + "' has no data rows");
  return rows;
}

void check_monotone(const std::vector<std::vector<double>>& rows, const std::string& path,
                    double max_gap, double t_prev0) {
  double prev = t_prev0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double t = rows[i][0];
    if (t <= prev)
      throw std::runtime_error("replay: '" + path + "' row " + std::to_string(i + 1) +
                               ": timestamps must be strictly increasing");
    if (max_gap > 0.0 && t - prev > max_gap + 1e-9)
      throw std::runtime_error("replay: '" + path + "' row " + std::to_string(i + 1) +
                               ": gap of " + fmt(t - prev) + " s exceeds " + fmt(max_gap) +
                               " s");
    prev = t;
  }
}

}  // namespace

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  const auto rows = read_csv(path, kImuHeader, 7);
  check_monotone(rows, path, 0.1, 0.0);  // first sample's interval starts at t = 0
  std::vector<ImuSample> out;
  out.reserve(rows.size());
  double prev = 0.0;
  for (const auto& r : rows) {
    ImuSample u;
    u.t = r[0];
    u.gyro = Vec3d(r[1], r[2], r[3]);
    u.accel = Vec3d(r[4], r[5], r[6]);
    u.dt = r[0] - prev;
    prev = r[0];
    out.push_back(u);
  }
  return out;
}

std::vector<GpsFix> read_gps_csv(const std::string& path) {
  const auto rows = read_csv(path, kGpsHeader, 7);
  check_monotone(rows, path, 0.0, 0.0);
  std::vector<GpsFix> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back(GpsFix{r[0], r[1], r[2], r[3], r[4], r[5], r[6]});
  return out;
}

std::vector<OdoSample> read_odo_csv(const std::string& path) {
  const auto rows = read_csv(path, kOdoHeader, 2);
  check_monotone(rows, path, 0.0, 0.0);
  std::vector<OdoSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(OdoSample{r[0], r[1]});
  return out;
}

std::vector<RefSample> read_ref_csv(const std::string& path) {
  const auto rows = read_csv(path, kRefHeader, 10);
  check_monotone(rows, path, 0.0, -1.0);  // reference logs begin at t = 0
  std::vector<RefSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back(RefSample{r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9]});
  return out;
}

void export_logs(const Scenario& sc, int run, const std::string& out_dir) {
  if (run < 0 || run >= sc.runs)
    throw std::runtime_error("export: run index " + std::to_string(run) +
                             " out of range for " + std::to_string(sc.runs) + " runs");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  const TrajectoryModel model = scenario_model(sc);

  {
    std::ofstream out = open_out(dir / "imu.csv");
    out << kImuHeader << '\n';
    for (const ImuSample& u : make_imu_stream(sc, model, run)) {
      const double row[7] = {u.t,        u.gyro.x(),  u.gyro.y(), u.gyro.z(),
                             u.accel.x(), u.accel.y(), u.accel.z()};
      write_row(out, row, 7);
    }
  }
  {
    std::ofstream out = open_out(dir / "ref.csv");
    out << kRefHeader << '\n';
    for (const RefSample& r : make_ref_stream(sc, model)) {
      const double row[10] = {r.t,  r.lat_deg, r.lon_deg,  r.h_m,       r.vn,
                              r.ve, r.vd,      r.roll_deg, r.pitch_deg, r.yaw_deg};
      write_row(out, row, 10);
    }
  }
  if (sc.aiding == AidingType::gps) {
    std::ofstream out = open_out(dir / "gps.csv");
    out << kGpsHeader << '\n';
    for (const GpsFix& f : make_gps_stream(sc, model, run)) {
      const double row[7] = {f.t, f.lat_deg, f.lon_deg, f.h_m, f.vn, f.ve, f.vd};
      write_row(out, row, 7);
    }
  } else {
    std::ofstream out = open_out(dir / "odo.csv");
    out << kOdoHeader << '\n';
    for (const OdoSample& s : make_odo_stream(sc, model, run)) {
      const double row[2] = {s.t, s.v_forward};
      write_row(out, row, 2);
    }
  }
}

std::vector<RunResult> replay_logs(const Scenario& sc, const ReplayPaths& paths, int run) {
  if (paths.imu.empty()) throw std::runtime_error("replay: an IMU log is required");
  if (paths.ref.empty()) throw std::runtime_error("replay: a reference log is required");
  const std::vector<ImuSample> imu = read_imu_csv(paths.imu);
  const std::vector<RefSample> ref = read_ref_csv(paths.ref);
  std::vector<GpsFix> gps;
  std::vector<OdoSample> odo;
  if (sc.aiding == AidingType::gps) {
    if (paths.gps.empty())
      throw std::runtime_error("replay: scenario uses GPS aiding but no GPS log was given");
    gps = read_gps_csv(paths.gps);
  } else {
    if (paths.odo.empty())
      throw std::runtime_error(
          "replay: scenario uses odometer aiding but no odometer log was given");
    odo = read_odo_csv(paths.odo);
  }
  std::vector<RunResult> out;
  out.reserve(sc.filters.size());
  for (ErrorDef def : sc.filters) out.push_back(run_filter_on_data(sc, def, run, imu, gps, odo, ref));
  return out;
}

void write_results_csv(const Scenario& sc, const std::vector<RunResult>& results,
                       const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  for (const RunResult& rr : results) {
    char runpart[16];
    std::snprintf(runpart, sizeof runpart, "_run%03d.csv", rr.run);
    std::ofstream out = open_out(dir / (sc.name + "_" + filter_name(rr.def) + runpart));
    out << kResultHeader << '\n';
    for (const EpochRecord& e : rr.epochs) {
      const double row[16] = {e.t,
                              e.err_pitch_deg,
                              e.err_roll_deg,
                              e.err_yaw_deg,
                              e.err_lat_m,
                              e.err_lon_m,
                              e.err_h_m,
                              e.err_vn,
                              e.err_ve,
                              e.err_vd,
                              e.gyro_bias.x(),
                              e.gyro_bias.y(),
                              e.gyro_bias.z(),
                              e.accel_bias.x(),
                              e.accel_bias.y(),
                              e.accel_bias.z()};
      write_row(out, row, 16);
    }
  }

  std::ofstream out = open_out(dir / (sc.name + "_summary.csv"));
  out << kSummaryHeader << '\n';
  for (const FilterSummary& s : summarize(results)) {
    out << filter_name(s.def) << ',' << s.runs;
    const double cols[10] = {s.terminal_att_rms_deg[0], s.terminal_att_rms_deg[1],
                             s.terminal_att_rms_deg[2], s.terminal_pos_rms_m[0],
                             s.terminal_pos_rms_m[1],   s.terminal_pos_rms_m[2],
                             s.terminal_vel_rms[0],     s.terminal_vel_rms[1],
                             s.terminal_vel_rms[2],     s.terminal_horiz_pos_rms_m};
    for (double c : cols) out << ',' << fmt(c);
    out << ',' << (s.hygiene.psd_ok ? 1 : 0) << ',' << fmt(s.hygiene.worst_eig_ratio) << ','
        << fmt(s.hygiene.max_asymmetry) << ',' << fmt(s.hygiene.max_feedback_residual) << ','
        << s.hygiene.epochs << ',' << s.hygiene.updates << ',' << s.hygiene.eig_fallbacks
        << '\n';
  }
}

}  // namespace se23nav
