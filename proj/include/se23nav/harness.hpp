// Experiment harness: scenario configuration, Monte Carlo execution, metric
// computation, CSV emission, log export/replay, and the analytic verification
// suites exposed by the CLI.
//
// Determinism contract: a (scenario, seed) pair fixes every random draw. Run r
// uses seed + r, fanned out into independent substreams per purpose, and every
// filter regenerates identical measurement streams, so filter comparisons are
// paired sample-by-sample. Replay binds the filter to the same boundary types
// that the logs store (degrees for angles), which makes replaying an exported
// log bit-identical to the in-memory run.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "se23nav/filter.hpp"
#include "se23nav/simulator.hpp"

namespace se23nav {

enum class AidingType { gps, odometer };

struct Scenario {
  std::string name;
  Geodetic origin;
  std::vector<MotionSegment> profile;  // SI units; a static scenario is one all-zero segment
  double imu_dt = 0.01;
  SensorSpec sensors;
  AidingType aiding = AidingType::gps;
  std::vector<ErrorDef> filters;

  // Initial estimate errors (roll, pitch, yaw order for attitude vectors, rad).
  bool random_attitude = false;
  Vec3d init_att_error = Vec3d::Zero();     // fixed error, used when !random_attitude
  Vec3d init_att_draw_std = Vec3d::Zero();  // per-run draw stds, used when random_attitude
  double init_vel_std = 0.0;                // m/s per NED axis, drawn per run
  double init_pos_std = 0.0;                // m per NED axis, drawn per run

  Vec3d cov_att_std = Vec3d::Zero();  // filter initial attitude covariance stds (rad)

  int runs = 1;
  std::uint64_t seed = 0;
  double gps_rate = 1.0;
  double odo_rate = 125.0;
  double odo_update_rate = 10.0;
  double record_dt = 1.0;  // error-record decimation interval
};

// JSON scenario loading; throws std::runtime_error with field-level messages.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text, const std::string& name_hint);

const char* filter_name(ErrorDef def);  // "rse" / "lse" / "so"
ErrorDef filter_from_name(const std::string& name);

// Reference sample in replay-log units; the shared source for initial-state
// construction and error metrics on both the in-memory and replay paths.
struct RefSample {
  double t = 0.0;
  double lat_deg = 0.0, lon_deg = 0.0, h_m = 0.0;
  double vn = 0.0, ve = 0.0, vd = 0.0;
  double roll_deg = 0.0, pitch_deg = 0.0, yaw_deg = 0.0;
};
RefSample ref_from_truth(double t, const NavState& nav, const EarthModel& em);

struct EpochRecord {
  double t = 0.0;
  double err_pitch_deg = 0.0, err_roll_deg = 0.0, err_yaw_deg = 0.0;
  double err_lat_m = 0.0, err_lon_m = 0.0, err_h_m = 0.0;
  double err_vn = 0.0, err_ve = 0.0, err_vd = 0.0;
  Vec3d gyro_bias = Vec3d::Zero();
  Vec3d accel_bias = Vec3d::Zero();
  bool gimbal = false;
};

struct RunResult {
  ErrorDef def = ErrorDef::right;
  int run = 0;
  std::vector<EpochRecord> epochs;
  FilterHygiene hygiene;
};

// Attitude error in degrees, (pitch, roll, yaw): both attitudes are mapped to
// the local NED frame at `at` and the ZYX Euler angles of est * truth^T taken.
Vec3d attitude_error_angles(const Mat3d& est_Cbe, const Mat3d& truth_Cbe, const Geodetic& at,
                            bool* gimbal = nullptr);

// Trajectory implied by the scenario profile and origin.
TrajectoryModel scenario_model(const Scenario& sc);

// Deterministic sensor-stream materialization for one run (seed + run, fanned out
// into per-sensor substreams). Every filter consumes the same streams.
std::vector<ImuSample> make_imu_stream(const Scenario& sc, const TrajectoryModel& model, int run);
std::vector<GpsFix> make_gps_stream(const Scenario& sc, const TrajectoryModel& model, int run);
std::vector<OdoSample> make_odo_stream(const Scenario& sc, const TrajectoryModel& model, int run);
std::vector<RefSample> make_ref_stream(const Scenario& sc, const TrajectoryModel& model);

// Runs one filter over explicit data streams. Both run_scenario and replay_logs
// funnel through this, which is what makes replay reproduce the in-memory run
// bit for bit. Initial-estimate draws depend on (scenario seed + run) only.
RunResult run_filter_on_data(const Scenario& sc, ErrorDef def, int run,
                             const std::vector<ImuSample>& imu, const std::vector<GpsFix>& gps,
                             const std::vector<OdoSample>& odo,
                             const std::vector<RefSample>& ref);

// Filter configuration implied by a scenario for one error definition.
FilterConfig make_filter_config(const Scenario& sc, ErrorDef def);

// Measurement adapters shared by simulation and replay.
MeasurementModel build_gps_measurement(const FilterState& st, const GpsFix& fix,
                                       const FilterConfig& cfg, const EarthModel& em);
MeasurementModel build_odo_measurement(const FilterState& st, double v_forward, int n_avg,
                                       const FilterConfig& cfg, const EarthModel& em);

// Window-averaging decimator taking raw odometer samples to filter update epochs.
class OdoDecimator {
 public:
  OdoDecimator(double odo_rate, double update_rate);

  struct Window {
    double t = 0.0;        // update epoch
    double v_forward = 0.0;  // window mean
    int n = 0;             // samples averaged
  };
  std::optional<Window> push(const OdoSample& s);

 private:
  double odo_rate_, update_rate_;
  std::size_t j_ = 0, m_ = 1, window_start_ = 0;
  double acc_ = 0.0;
};

std::vector<RunResult> run_scenario(const Scenario& sc);

struct FilterSummary {
  ErrorDef def = ErrorDef::right;
  int runs = 0;
  double terminal_att_rms_deg[3] = {0, 0, 0};  // pitch, roll, yaw
  double terminal_pos_rms_m[3] = {0, 0, 0};    // lat, lon, h
  double terminal_vel_rms[3] = {0, 0, 0};      // vn, ve, vd
  double terminal_horiz_pos_rms_m = 0.0;
  FilterHygiene hygiene;  // merged over runs
};

// Pooled RMS of each error column over the final window_s seconds of every run.
std::vector<FilterSummary> summarize(const std::vector<RunResult>& results,
                                     double window_s = 10.0);

double rms(const std::vector<double>& xs);

// One CSV per (run, filter): <name>_<filter>_run<NNN>.csv, plus <name>_summary.csv.
// All numbers in %.17g so files round-trip exactly.
void write_results_csv(const Scenario& sc, const std::vector<RunResult>& results,
                       const std::string& out_dir);

// Exports replay logs (imu.csv, ref.csv, and gps.csv or odo.csv) for one run.
void export_logs(const Scenario& sc, int run, const std::string& out_dir);

struct ReplayPaths {
  std::string imu, gps, odo, ref;
};

// Runs the scenario's filters against logged data; errors are computed against
// the reference log. `run` selects the initial-estimate draws and must match the
// exported run index for bit-identical results. Throws std::runtime_error on
// schema or monotonicity faults.
std::vector<RunResult> replay_logs(const Scenario& sc, const ReplayPaths& paths, int run = 0);

// Log parsing, exposed for tests.
std::vector<ImuSample> read_imu_csv(const std::string& path);
std::vector<GpsFix> read_gps_csv(const std::string& path);
std::vector<OdoSample> read_odo_csv(const std::string& path);
std::vector<RefSample> read_ref_csv(const std::string& path);

// ---- analytic verification suites ----

struct GroupAffineReport {
  double max_transformed = 0.0;  // max relative residual, transformed dynamics
  double min_classic = 0.0;      // min relative residual, classic dynamics
  double seconds = 0.0;
};
GroupAffineReport verify_group_affine(int pairs, std::uint64_t seed);

struct LogLinearityReport {
  double right = 0.0;  // max relative mismatch vs. linear propagation
  double left = 0.0;
  double so = 0.0;
  double seconds = 0.0;
};
LogLinearityReport verify_log_linearity();

struct JacobianReport {
  double f_right = 0.0, f_left = 0.0, f_so = 0.0;
  double h_gps_right = 0.0, h_gps_left = 0.0, h_gps_so = 0.0;
  double h_odo_right = 0.0, h_odo_left = 0.0, h_odo_so = 0.0;
  double max_error() const;
};
JacobianReport verify_jacobians(int states, std::uint64_t seed);

}  // namespace se23nav
