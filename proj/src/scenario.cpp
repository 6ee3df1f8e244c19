#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "se23nav/harness.hpp"

namespace se23nav {
namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;
constexpr double kG0 = 9.80665;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("scenario: " + msg);
}

double num_at(const json& j, const std::string& key, std::optional<double> def = {}) {
  if (!j.contains(key)) {
    if (def) return *def;
    fail("missing numeric field '" + key + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number()) fail("field '" + key + "' must be a number");
  return v.get<double>();
}

Vec3d vec3_at(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) fail("field '" + key + "' must be an array of 3 numbers");
  Vec3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) fail("field '" + key + "' must be an array of 3 numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

const json& obj_at(const json& j, const std::string& key) {
  if (!j.contains(key)) fail("missing object field '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_object()) fail("field '" + key + "' must be an object");
  return v;
}

std::vector<MotionSegment> parse_profile(const json& root) {
  std::vector<MotionSegment> profile;
  const bool has_profile = root.contains("profile");
  const bool has_static = root.contains("static_duration_s");
  if (has_profile == has_static)
    fail("exactly one of 'profile' and 'static_duration_s' is required");
  if (has_static) {
    MotionSegment seg;
    seg.duration = num_at(root, "static_duration_s");
    if (!(seg.duration > 0.0)) fail("'static_duration_s' must be positive");
    profile.push_back(seg);
    return profile;
  }
  const json& arr = root.at("profile");
  if (!arr.is_array() || arr.empty()) fail("'profile' must be a non-empty array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& e = arr[i];
    if (!e.is_object()) fail("profile entry " + std::to_string(i) + " must be an object");
    MotionSegment seg;
    seg.duration = num_at(e, "duration_s");
    seg.w = Vec3d(num_at(e, "wx_dps", 0.0), num_at(e, "wy_dps", 0.0), num_at(e, "wz_dps", 0.0)) * kDeg;
    seg.a = Vec3d(num_at(e, "ax_mps2", 0.0), num_at(e, "ay_mps2", 0.0), num_at(e, "az_mps2", 0.0));
    if (!(seg.duration > 0.0)) fail("profile entry " + std::to_string(i) + ": duration must be positive");
    profile.push_back(seg);
  }
  return profile;
}

}  // namespace

const char* filter_name(ErrorDef def) {
  switch (def) {
    case ErrorDef::right: return "rse";
    case ErrorDef::left: return "lse";
    case ErrorDef::so: return "so";
  }
  return "?";
}

ErrorDef filter_from_name(const std::string& name) {
  if (name == "rse") return ErrorDef::right;
  if (name == "lse") return ErrorDef::left;
  if (name == "so") return ErrorDef::so;
  throw std::runtime_error("unknown filter '" + name + "' (expected rse, lse, or so)");
}

Scenario scenario_from_json_text(const std::string& text, const std::string& name_hint) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("top level must be an object");

  Scenario sc;
  sc.name = root.value("name", name_hint);
  if (sc.name.empty()) fail("missing 'name'");

  const json& origin = obj_at(root, "origin");
  sc.origin.lat = num_at(origin, "lat_deg") * kDeg;
  sc.origin.lon = num_at(origin, "lon_deg") * kDeg;
  sc.origin.h = num_at(origin, "h_m");
  if (std::abs(sc.origin.lat) > 89.0 * kDeg) fail("'origin.lat_deg' must lie in (-89, 89)");

  const double imu_rate = num_at(root, "imu_rate_hz", 100.0);
  if (!(imu_rate >= 10.0)) fail("'imu_rate_hz' must be at least 10");
  sc.imu_dt = 1.0 / imu_rate;

  sc.profile = parse_profile(root);

  const std::string aiding = root.value("aiding", "");
  if (aiding == "gps")
    sc.aiding = AidingType::gps;
  else if (aiding == "odometer")
    sc.aiding = AidingType::odometer;
  else
    fail("'aiding' must be \"gps\" or \"odometer\"");

  if (!root.contains("filters") || !root.at("filters").is_array() || root.at("filters").empty())
    fail("'filters' must be a non-empty array of filter names");
  std::set<std::string> seen;
  for (const json& f : root.at("filters")) {
    if (!f.is_string()) fail("'filters' entries must be strings");
    const std::string s = f.get<std::string>();
    if (!seen.insert(s).second) fail("duplicate filter '" + s + "'");
    sc.filters.push_back(filter_from_name(s));
  }

  const json& sensors = obj_at(root, "sensors");
  sc.sensors.gyro_bias = num_at(sensors, "gyro_bias_deg_per_hr", 0.0) * kDeg / 3600.0;
  sc.sensors.gyro_arw = num_at(sensors, "gyro_arw_deg_per_sqrt_hr", 0.0) * kDeg / 60.0;
  sc.sensors.accel_bias = num_at(sensors, "accel_bias_ug", 0.0) * kG0 * 1e-6;
  sc.sensors.accel_vrw = num_at(sensors, "accel_vrw_ug_per_sqrt_hz", 0.0) * kG0 * 1e-6;
  sc.sensors.gps_vel_std = num_at(sensors, "gps_vel_std_mps", 0.1);
  sc.sensors.gps_pos_std = num_at(sensors, "gps_pos_std_m", 10.0);
  sc.sensors.odo_scale_std = num_at(sensors, "odo_scale_std", 0.001);

  const json& init = obj_at(root, "init");
  const bool fixed = init.contains("attitude_error_deg");
  const bool random = init.contains("attitude_std_deg");
  if (fixed == random)
    fail("'init' needs exactly one of 'attitude_error_deg' and 'attitude_std_deg'");
  sc.random_attitude = random;
  if (fixed)
    sc.init_att_error = vec3_at(init, "attitude_error_deg") * kDeg;
  else
    sc.init_att_draw_std = vec3_at(init, "attitude_std_deg") * kDeg;
  sc.init_vel_std = num_at(init, "vel_std_mps");
  sc.init_pos_std = num_at(init, "pos_std_m");
  if (sc.init_vel_std < 0.0 || sc.init_pos_std < 0.0) fail("'init' stds must be non-negative");

  if (root.contains("covariance"))
    sc.cov_att_std = vec3_at(obj_at(root, "covariance"), "attitude_std_deg") * kDeg;
  else
    sc.cov_att_std = sc.random_attitude ? sc.init_att_draw_std : sc.init_att_error.cwiseAbs();
  if ((sc.cov_att_std.array() <= 0.0).any())
    fail("initial attitude covariance stds must be positive");

  const double runs = num_at(root, "runs", 1.0);
  if (runs < 1.0 || runs != std::floor(runs)) fail("'runs' must be a positive integer");
  sc.runs = static_cast<int>(runs);
  const double seed = num_at(root, "seed", 0.0);
  if (seed < 0.0 || seed != std::floor(seed)) fail("'seed' must be a non-negative integer");
  sc.seed = static_cast<std::uint64_t>(seed);

  sc.gps_rate = num_at(root, "gps_rate_hz", 1.0);
  sc.odo_rate = num_at(root, "odo_rate_hz", 125.0);
  sc.odo_update_rate = num_at(root, "odo_update_rate_hz", 10.0);
  if (!(sc.gps_rate > 0.0) || !(sc.odo_rate > 0.0) || !(sc.odo_update_rate > 0.0))
    fail("sensor rates must be positive");
  if (sc.odo_rate < sc.odo_update_rate)
    fail("'odo_rate_hz' must be at least 'odo_update_rate_hz'");
  const double record_rate = num_at(root, "record_rate_hz", 1.0);
  if (!(record_rate > 0.0)) fail("'record_rate_hz' must be positive");
  sc.record_dt = 1.0 / record_rate;

  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return scenario_from_json_text(ss.str(), stem);
}

}  // namespace se23nav
