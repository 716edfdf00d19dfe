// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "aquafeed/detection.hpp"
#include "aquafeed/error.hpp"
#include "json_util.hpp"

namespace aquafeed {

namespace {

using json_util::json;
using json_util::join;

constexpr ErrorKind kV = ErrorKind::Validation;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!obj.is_object()) throw Error(kV, path.empty() ? "$" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Error(kV, join(path, key), "unknown key");
  }
}

double opt_double(const json& obj, const char* key, const std::string& path, double fallback) {
  return obj.contains(key) ? json_util::get_double(obj, key, path, kV) : fallback;
}

std::int64_t opt_int(const json& obj, const char* key, const std::string& path, std::int64_t fallback) {
  return obj.contains(key) ? json_util::get_int(obj, key, path, kV) : fallback;
}

CameraGeometry parse_camera(const json& j, const std::string& path, const std::filesystem::path& base) {
  check_keys(j, {"focal_px", "image_width", "image_height", "depth_m", "depth_map"}, path);
  CameraIntrinsics in{opt_double(j, "focal_px", path, 500.0),
                      static_cast<int>(opt_int(j, "image_width", path, kStandardImageSize)),
                      static_cast<int>(opt_int(j, "image_height", path, kStandardImageSize))};
  in.validate();
  if (j.contains("depth_map")) {
    std::filesystem::path p = json_util::get_string(j, "depth_map", path, kV);
    if (p.is_relative() && !base.empty()) p = base / p;
    return {in, read_depth_map(p)};
  }
  const double d = opt_double(j, "depth_m", path, 0.5);
  if (!(d > 0.0)) throw Error(kV, join(path, "depth_m"), "must be > 0");
  return {in, DepthMap::uniform(in.image_width, in.image_height, static_cast<float>(d))};
}

std::vector<AlertRule> parse_rules(const json& arr) {
  return alert_rules_from_json(arr.dump());
}

FeedingBandTable bands_from(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw Error(kV, path, "expected an array");
  std::vector<FeedingBand> bands;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& b = arr[i];
    check_keys(b, {"lower_g", "upper_g", "percent_min", "percent_max", "percent"}, p);
    FeedingBand band;
    band.lower_g = json_util::get_double(b, "lower_g", p, kV);
    if (b.contains("upper_g") && !b.at("upper_g").is_null()) band.upper_g = json_util::get_double(b, "upper_g", p, kV);
    band.percent_min = json_util::get_double(b, "percent_min", p, kV);
    band.percent_max = json_util::get_double(b, "percent_max", p, kV);
    if (b.contains("percent")) band.percent_override = json_util::get_double(b, "percent", p, kV);
    bands.push_back(band);
  }
  return FeedingBandTable(std::move(bands));
}

TankConfig parse_tank(const json& j, const std::string& path, const std::filesystem::path& base) {
  check_keys(j,
             {"tank_id", "cameras", "length_method", "coefficients", "bands", "windows_per_day",
              "first_window_offset_ms", "window_grace_ms", "cap_fraction_of_biomass",
              "pairing_tolerance_ms", "unpaired_timeout_ms", "ack_timeout_ms",
              "manual_plan_max_age_ms", "ph_pump_seconds", "ph_cooldown_ms", "rules"},
             path);
  TankConfig t;
  t.tank_id = json_util::get_string(j, "tank_id", path, kV);
  if (j.contains("cameras")) {
    const json& cams = j.at("cameras");
    check_keys(cams, {"A", "B"}, join(path, "cameras"));
    if (cams.contains("A")) t.cameras[0] = parse_camera(cams.at("A"), join(path, "cameras.A"), base);
    if (cams.contains("B")) t.cameras[1] = parse_camera(cams.at("B"), join(path, "cameras.B"), base);
  }
  if (j.contains("length_method")) {
    const auto m = length_method_from_string(json_util::get_string(j, "length_method", path, kV));
    if (!m) throw Error(kV, join(path, "length_method"), "expected world-euclidean or eq3-literal");
    t.length_method = *m;
  }
  if (j.contains("coefficients")) {
    const json& c = j.at("coefficients");
    check_keys(c, {"a", "b"}, join(path, "coefficients"));
    t.coefficients.a = opt_double(c, "a", join(path, "coefficients"), t.coefficients.a);
    t.coefficients.b = opt_double(c, "b", join(path, "coefficients"), t.coefficients.b);
  }
  if (j.contains("bands")) t.bands = bands_from(j.at("bands"), join(path, "bands"));
  t.windows_per_day = static_cast<int>(opt_int(j, "windows_per_day", path, t.windows_per_day));
  t.first_window_offset_ms = opt_int(j, "first_window_offset_ms", path, t.first_window_offset_ms);
  t.window_grace_ms = opt_int(j, "window_grace_ms", path, t.window_grace_ms);
  t.cap_fraction_of_biomass = opt_double(j, "cap_fraction_of_biomass", path, t.cap_fraction_of_biomass);
  t.pairing_tolerance_ms = opt_int(j, "pairing_tolerance_ms", path, t.pairing_tolerance_ms);
  t.unpaired_timeout_ms = opt_int(j, "unpaired_timeout_ms", path, t.unpaired_timeout_ms);
  t.ack_timeout_ms = opt_int(j, "ack_timeout_ms", path, t.ack_timeout_ms);
  t.manual_plan_max_age_ms = opt_int(j, "manual_plan_max_age_ms", path, t.manual_plan_max_age_ms);
  t.ph_pump_seconds = opt_double(j, "ph_pump_seconds", path, t.ph_pump_seconds);
  t.ph_cooldown_ms = opt_int(j, "ph_cooldown_ms", path, t.ph_cooldown_ms);
  if (j.contains("rules")) t.rules = parse_rules(j.at("rules"));
  t.validate();
  return t;
}

sim::SensorModel parse_sensor(const json& j, const std::string& path, sim::SensorModel s) {
  check_keys(j, {"baseline", "drift_per_hour", "noise_std", "min", "max"}, path);
  s.baseline = opt_double(j, "baseline", path, s.baseline);
  s.drift_per_hour = opt_double(j, "drift_per_hour", path, s.drift_per_hour);
  s.noise_std = opt_double(j, "noise_std", path, s.noise_std);
  s.min = opt_double(j, "min", path, s.min);
  s.max = opt_double(j, "max", path, s.max);
  return s;
}

}  // namespace

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ControlConfig parse_control_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = json_util::parse_document(text, kV);
  check_keys(doc,
             {"broker_url", "http", "log_dir", "snapshot_every", "sync_log", "recent_events",
              "store", "tanks", "scenario"},
             "");
  ControlConfig c;
  if (doc.contains("broker_url")) c.broker_url = json_util::get_string(doc, "broker_url", "", kV);
  if (doc.contains("http")) {
    const json& h = doc.at("http");
    check_keys(h, {"host", "port"}, "http");
    if (h.contains("host")) c.http_host = json_util::get_string(h, "host", "http", kV);
    c.http_port = static_cast<int>(opt_int(h, "port", "http", c.http_port));
    if (c.http_port < 0 || c.http_port > 65535) throw Error(kV, "http.port", "out of range");
  }
  if (doc.contains("log_dir")) {
    std::filesystem::path p = json_util::get_string(doc, "log_dir", "", kV);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.service.log_dir = p;
  }
  c.service.snapshot_every = static_cast<std::uint64_t>(
      opt_int(doc, "snapshot_every", "", static_cast<std::int64_t>(c.service.snapshot_every)));
  if (c.service.snapshot_every == 0) throw Error(kV, "snapshot_every", "must be > 0");
  if (doc.contains("sync_log")) c.service.sync_log = json_util::get_bool(doc, "sync_log", "", kV);
  c.service.recent_events = static_cast<std::size_t>(
      opt_int(doc, "recent_events", "", static_cast<std::int64_t>(c.service.recent_events)));
  if (doc.contains("store")) {
    const json& s = doc.at("store");
    check_keys(s, {"retention_ms", "reorder_window_ms", "max_points_per_series"}, "store");
    c.service.store.retention_ms = opt_int(s, "retention_ms", "store", c.service.store.retention_ms);
    c.service.store.reorder_window_ms = opt_int(s, "reorder_window_ms", "store", c.service.store.reorder_window_ms);
    c.service.store.max_points_per_series = static_cast<std::size_t>(opt_int(
        s, "max_points_per_series", "store", static_cast<std::int64_t>(c.service.store.max_points_per_series)));
  }
  if (doc.contains("tanks")) {
    const json& arr = json_util::get_array(doc, "tanks", "", kV);
    c.tanks.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.tanks.push_back(parse_tank(arr[i], "tanks[" + std::to_string(i) + "]", base_dir));
    }
    if (c.tanks.empty()) throw Error(kV, "tanks", "at least one tank is required");
  }
  return c;
}

ControlConfig load_control_config(const std::filesystem::path& path) {
  try {
    return parse_control_config(read_text_file(path), path.parent_path());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.field(), e.message());
  }
}

void apply_env_overrides(ControlConfig& config, const EnvLookup& env) {
  if (auto v = env("AQUA_BROKER_URL")) config.broker_url = *v;
  if (auto v = env("AQUA_HTTP_PORT")) {
    try {
      config.http_port = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(kV, "AQUA_HTTP_PORT", "not an integer");
    }
  }
  if (auto v = env("AQUA_LOG_DIR")) config.service.log_dir = *v;
  if (auto v = env("AQUA_WINDOWS_PER_DAY")) {
    int n = 0;
    try {
      n = std::stoi(*v);
    } catch (const std::exception&) {
      throw Error(kV, "AQUA_WINDOWS_PER_DAY", "not an integer");
    }
    for (auto& t : config.tanks) t.windows_per_day = n;
  }
  if (auto v = env("AQUA_PH_BAND")) {
    const auto comma = v->find(',');
    double low = 0.0;
    double high = 0.0;
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      low = std::stod(v->substr(0, comma));
      high = std::stod(v->substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(kV, "AQUA_PH_BAND", "expected 'low,high'");
    }
    for (auto& t : config.tanks) {
      for (auto& r : t.rules) {
        if (r.kind == ReadingKind::Ph) {
          r.low = low;
          r.high = high;
        }
      }
    }
  }
  for (auto& t : config.tanks) t.validate();
}

sim::ScenarioConfig parse_scenario_config(std::string_view text) {
  json doc = json_util::parse_document(text, kV);
  if (doc.is_object() && doc.contains("scenario")) doc = doc.at("scenario");
  check_keys(doc,
             {"tank_id", "seed", "start_ms", "population", "initial_weight_g", "initial_weight_spread_g",
              "coefficients", "feed_conversion_ratio", "telemetry_period_ms", "frame_period_ms",
              "camera_skew_ms", "sensors", "cameras", "detector", "feeder", "ph_pump_rate_per_s"},
             "scenario");
  const std::string p = "scenario";
  sim::ScenarioConfig s;
  if (doc.contains("tank_id")) s.tank_id = json_util::get_string(doc, "tank_id", p, kV);
  if (doc.contains("seed")) {
    const std::int64_t seed = json_util::get_int(doc, "seed", p, kV);
    if (seed < 0) throw Error(kV, "scenario.seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  s.start_ms = opt_int(doc, "start_ms", p, s.start_ms);
  s.population = static_cast<int>(opt_int(doc, "population", p, s.population));
  s.initial_weight_g = opt_double(doc, "initial_weight_g", p, s.initial_weight_g);
  s.initial_weight_spread_g = opt_double(doc, "initial_weight_spread_g", p, s.initial_weight_spread_g);
  if (doc.contains("coefficients")) {
    const json& c = doc.at("coefficients");
    check_keys(c, {"a", "b"}, "scenario.coefficients");
    s.coefficients.a = opt_double(c, "a", "scenario.coefficients", s.coefficients.a);
    s.coefficients.b = opt_double(c, "b", "scenario.coefficients", s.coefficients.b);
  }
  s.feed_conversion_ratio = opt_double(doc, "feed_conversion_ratio", p, s.feed_conversion_ratio);
  s.telemetry_period_ms = opt_int(doc, "telemetry_period_ms", p, s.telemetry_period_ms);
  s.frame_period_ms = opt_int(doc, "frame_period_ms", p, s.frame_period_ms);
  s.camera_skew_ms = opt_int(doc, "camera_skew_ms", p, s.camera_skew_ms);
  if (doc.contains("sensors")) {
    const json& sensors = doc.at("sensors");
    check_keys(sensors, {"ph", "dissolved_oxygen", "temperature"}, "scenario.sensors");
    for (auto& model : s.sensors) {
      const std::string key(to_string(model.kind));
      if (sensors.contains(key)) model = parse_sensor(sensors.at(key), "scenario.sensors." + key, model);
    }
  }
  if (doc.contains("cameras")) {
    const json& cams = doc.at("cameras");
    check_keys(cams, {"A", "B"}, "scenario.cameras");
    for (std::size_t i = 0; i < 2; ++i) {
      const char* key = i == 0 ? "A" : "B";
      if (!cams.contains(key)) continue;
      const std::string cp = std::string("scenario.cameras.") + key;
      check_keys(cams.at(key), {"focal_px", "depth_m"}, cp);
      s.cameras[i].focal_px = opt_double(cams.at(key), "focal_px", cp, s.cameras[i].focal_px);
      s.cameras[i].depth_m = opt_double(cams.at(key), "depth_m", cp, s.cameras[i].depth_m);
    }
  }
  if (doc.contains("detector")) {
    const json& d = doc.at("detector");
    check_keys(d, {"p_miss", "pixel_noise_std"}, "scenario.detector");
    s.detector.p_miss = opt_double(d, "p_miss", "scenario.detector", s.detector.p_miss);
    s.detector.pixel_noise_std = opt_double(d, "pixel_noise_std", "scenario.detector", s.detector.pixel_noise_std);
  }
  if (doc.contains("feeder")) {
    const json& f = doc.at("feeder");
    const std::string fp = "scenario.feeder";
    check_keys(f, {"hopper_g", "dispense_rate_g_per_s", "load_cell_noise_std_g", "tick_s", "tolerance_g"}, fp);
    s.feeder.hopper_g = opt_double(f, "hopper_g", fp, s.feeder.hopper_g);
    s.feeder.dispense_rate_g_per_s = opt_double(f, "dispense_rate_g_per_s", fp, s.feeder.dispense_rate_g_per_s);
    s.feeder.load_cell_noise_std_g = opt_double(f, "load_cell_noise_std_g", fp, s.feeder.load_cell_noise_std_g);
    s.feeder.tick_s = opt_double(f, "tick_s", fp, s.feeder.tick_s);
    s.feeder.tolerance_g = opt_double(f, "tolerance_g", fp, s.feeder.tolerance_g);
  }
  s.ph_pump_rate_per_s = opt_double(doc, "ph_pump_rate_per_s", p, s.ph_pump_rate_per_s);
  s.validate();
  return s;
}

sim::ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  try {
    return parse_scenario_config(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.field(), e.message());
  }
}

CameraIntrinsics parse_intrinsics(std::string_view text) {
  const json doc = json_util::parse_document(text);
  check_keys(doc, {"focal_px", "image_width", "image_height"}, "");
  CameraIntrinsics in{json_util::get_double(doc, "focal_px", ""),
                      json_util::get_int32(doc, "image_width", ""),
                      json_util::get_int32(doc, "image_height", "")};
  in.validate();
  return in;
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  try {
    return parse_intrinsics(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.field(), e.message());
  }
}

FeedingBandTable parse_band_table(std::string_view text) {
  return bands_from(json_util::parse_document(text, kV), "bands");
}

}  // namespace aquafeed
