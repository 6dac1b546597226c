#pragma once

// Scenario and calibration files: JSON (comments allowed), every field
// optional except the waypoint list, unknown keys rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "vflock/camera_geometry.hpp"
#include "vflock/swarm_sim.hpp"

namespace vflock {

using json = nlohmann::json;

namespace config_detail {

/// Reads typed values out of one JSON object and remembers which keys
/// were consumed, so leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : obj_(object), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(field(key), "has the wrong type");
    }
  }

  template <typename T>
  void read_unsigned(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) throw ValidationError(field(key), "must be a nonnegative integer");
    out = v.get<T>();
  }

  void read_degrees(const std::string& deg_key, const std::string& rad_key, double& out_rad) {
    const bool d = has(deg_key), r = has(rad_key);
    if (d && r) throw ValidationError(field(deg_key), "give either " + deg_key + " or " + rad_key);
    double v = 0.0;
    if (d) {
      read(deg_key, v);
      out_rad = deg2rad(v);
    } else if (r) {
      read(rad_key, out_rad);
    }
  }

  std::vector<Vec2> read_points(const std::string& key) {
    std::vector<Vec2> out;
    const json& arr = raw(key);
    if (!arr.is_array()) throw ValidationError(field(key), "expected a list of [x, y] points");
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ValidationError(field(key), "expected a list of [x, y] points");
      out.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return out;
  }

  /// Keys present in the object but never asked for.
  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) out.push_back(field(it.key()));
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json points_to_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y()});
  return arr;
}

inline void throw_unknown(const std::vector<std::string>& keys) {
  if (keys.empty()) return;
  std::string list;
  for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
  throw ValidationError(keys.front(), "unknown key(s): " + list);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace config_detail

/// Builds a validated scenario from parsed JSON.
inline ScenarioConfig config_from_json(const json& root) {
  using config_detail::ObjectReader;
  ScenarioConfig c;
  std::vector<std::string> unknown;
  ObjectReader top(root, "");

  top.read("name", c.name);
  top.read_unsigned("agent_count", c.agent_count);
  if (top.has("initial_positions")) c.initial_positions = top.read_points("initial_positions");
  top.read("initial_spacing", c.initial_spacing);
  {
    const bool d = top.has("headings_deg"), r = top.has("headings_rad");
    if (d && r) throw ValidationError("headings_deg", "give either headings_deg or headings_rad");
    top.read(d ? "headings_deg" : "headings_rad", c.headings);
    if (d)
      for (double& h : c.headings) h = deg2rad(h);
  }
  top.read_unsigned("seed", c.seed);
  top.read_unsigned("threads", c.threads);
  top.read("physics_step", c.physics_step);
  top.read("sensor_period", c.sensor_period);
  top.read("max_duration", c.max_duration);
  top.read("velocity_time_constant", c.velocity_time_constant);
  top.read("collision_radius", c.collision_radius);

  if (top.has("noise")) {
    ObjectReader r(top.raw("noise"), "noise");
    auto& n = c.noise;
    r.read("p_d", n.p_d);
    r.read_degrees("sigma_beta_deg", "sigma_beta_rad", n.sigma_beta);
    r.read("range_noise_c0", n.range_noise.c0);
    r.read("range_noise_c1", n.range_noise.c1);
    r.read("clutter_rate", n.clutter_rate);
    r.read("arena_side", n.arena_side);
    r.read("latency", n.latency);
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }

  if (top.has("tracker")) {
    ObjectReader r(top.raw("tracker"), "tracker");
    auto& t = c.tracker;
    r.read("p_s", t.p_s);
    r.read("p_d", t.p_d);
    r.read("sigma_v", t.sigma_v);
    r.read_degrees("sigma_beta_deg", "sigma_beta_rad", t.sigma_beta);
    r.read("range_noise_c0", t.range_noise.c0);
    r.read("range_noise_c1", t.range_noise.c1);
    const bool has_density = r.has("clutter_density"), has_side = r.has("arena_side");
    if (has_density && has_side)
      throw ValidationError("tracker.clutter_density", "give either clutter_density or arena_side");
    if (has_side) {
      double a = 0.0;
      r.read("arena_side", a);
      if (!(a > 0.0)) throw ValidationError("tracker.arena_side", "must be > 0");
      t.clutter_density = 1.0 / (a * a);
    }
    r.read("clutter_density", t.clutter_density);
    r.read("birth_weight", t.birth_weight);
    r.read("birth_sigma_p", t.birth_sigma_p);
    r.read("birth_sigma_v", t.birth_sigma_v);
    r.read("truncation", t.truncation);
    r.read("merge_threshold", t.merge_threshold);
    r.read_unsigned("max_components", t.max_components);
    r.read("extraction_threshold", t.extraction_threshold);
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }

  if (top.has("flocking")) {
    ObjectReader r(top.raw("flocking"), "flocking");
    r.read("k_sep", c.flock.k_sep);
    r.read("k_coh", c.flock.k_coh);
    r.read("k_mig", c.flock.k_mig);
    r.read("v_max", c.flock.v_max);
    r.read("separation_exponent", c.flock.separation_exponent);
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }

  if (!top.has("migration")) throw ValidationError("migration.waypoints", "is required");
  {
    ObjectReader r(top.raw("migration"), "migration");
    if (!r.has("waypoints")) throw ValidationError("migration.waypoints", "is required");
    c.migration.waypoints = r.read_points("waypoints");
    r.read("acceptance_radius", c.migration.acceptance_radius);
    r.read("cyclic", c.migration.cyclic);
    if (r.has("trigger")) {
      std::string trig;
      r.read("trigger", trig);
      if (trig == "global")
        c.trigger = WaypointTrigger::global;
      else if (trig == "independent")
        c.trigger = WaypointTrigger::independent;
      else
        throw ValidationError("migration.trigger", "must be \"global\" or \"independent\"");
    }
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }

  if (top.has("metrics")) {
    ObjectReader r(top.raw("metrics"), "metrics");
    r.read("ospa_cutoff", c.ospa_cutoff);
    r.read("ospa_order", c.ospa_order);
    r.read("convergence_time", c.convergence_time);
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }

  auto u = top.unknown();
  unknown.insert(unknown.begin(), u.begin(), u.end());
  config_detail::throw_unknown(unknown);

  c.noise.frame_period = c.sensor_period;
  c.validate();
  return c;
}

/// Canonical, fully explicit form. Angles are written in radians so that
/// parsing the output reproduces the config exactly.
inline json config_to_json(const ScenarioConfig& c) {
  using config_detail::points_to_json;
  json j;
  j["name"] = c.name;
  j["agent_count"] = c.agent_count;
  if (!c.initial_positions.empty()) j["initial_positions"] = points_to_json(c.initial_positions);
  j["initial_spacing"] = c.initial_spacing;
  if (!c.headings.empty()) j["headings_rad"] = c.headings;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["physics_step"] = c.physics_step;
  j["sensor_period"] = c.sensor_period;
  j["max_duration"] = c.max_duration;
  j["velocity_time_constant"] = c.velocity_time_constant;
  j["collision_radius"] = c.collision_radius;
  j["noise"] = {{"p_d", c.noise.p_d},
                {"sigma_beta_rad", c.noise.sigma_beta},
                {"range_noise_c0", c.noise.range_noise.c0},
                {"range_noise_c1", c.noise.range_noise.c1},
                {"clutter_rate", c.noise.clutter_rate},
                {"arena_side", c.noise.arena_side},
                {"latency", c.noise.latency}};
  const auto& t = c.tracker;
  j["tracker"] = {{"p_s", t.p_s},
                  {"p_d", t.p_d},
                  {"sigma_v", t.sigma_v},
                  {"sigma_beta_rad", t.sigma_beta},
                  {"range_noise_c0", t.range_noise.c0},
                  {"range_noise_c1", t.range_noise.c1},
                  {"clutter_density", t.clutter_density},
                  {"birth_weight", t.birth_weight},
                  {"birth_sigma_p", t.birth_sigma_p},
                  {"birth_sigma_v", t.birth_sigma_v},
                  {"truncation", t.truncation},
                  {"merge_threshold", t.merge_threshold},
                  {"max_components", t.max_components},
                  {"extraction_threshold", t.extraction_threshold}};
  j["flocking"] = {{"k_sep", c.flock.k_sep},
                   {"k_coh", c.flock.k_coh},
                   {"k_mig", c.flock.k_mig},
                   {"v_max", c.flock.v_max},
                   {"separation_exponent", c.flock.separation_exponent}};
  j["migration"] = {{"waypoints", points_to_json(c.migration.waypoints)},
                    {"acceptance_radius", c.migration.acceptance_radius},
                    {"cyclic", c.migration.cyclic},
                    {"trigger", c.trigger == WaypointTrigger::global ? "global" : "independent"}};
  j["metrics"] = {{"ospa_cutoff", c.ospa_cutoff},
                  {"ospa_order", c.ospa_order},
                  {"convergence_time", c.convergence_time}};
  return j;
}

inline std::string serialize_config(const ScenarioConfig& c) { return config_to_json(c).dump(2); }

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits. The
/// thread count is left out since it does not change results.
inline std::string config_hash(const ScenarioConfig& c) {
  json j = config_to_json(c);
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError("<config>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(root);
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
  return config_from_json(config_detail::read_json_file(path));
}

struct Calibration {
  CameraRig rig;
  double object_size = 0.5;
};

/// Camera rig file: four cameras with focal length, principal point,
/// k1..k4, resolution and yaw offset, plus the agent's bounding-cube side.
inline Calibration calibration_from_json(const json& root) {
  using config_detail::ObjectReader;
  Calibration cal;
  ObjectReader top(root, "");
  top.read("object_size", cal.object_size);
  if (!(cal.object_size > 0.0)) throw ValidationError("object_size", "must be > 0");
  if (!top.has("cameras")) throw ValidationError("cameras", "is required");
  const json& cams = top.raw("cameras");
  if (!cams.is_array() || cams.size() != 4) throw ValidationError("cameras", "expected 4 cameras");
  std::vector<std::string> unknown = top.unknown();
  for (std::size_t i = 0; i < 4; ++i) {
    ObjectReader r(cams[i], "cameras[" + std::to_string(i) + "]");
    auto& cam = cal.rig.cameras[i];
    auto& in = cam.intrinsics;
    r.read("focal_length", in.focal_length);
    std::array<double, 2> pp{0.0, 0.0};
    std::array<int, 2> res{0, 0};
    r.read("principal_point", pp);
    r.read("distortion", in.distortion);
    r.read("resolution", res);
    in.principal_point = {pp[0], pp[1]};
    in.width = res[0];
    in.height = res[1];
    r.read_degrees("yaw_offset_deg", "yaw_offset_rad", cam.yaw_offset);
    auto u = r.unknown();
    unknown.insert(unknown.end(), u.begin(), u.end());
  }
  config_detail::throw_unknown(unknown);
  cal.rig.validate();
  return cal;
}

inline Calibration parse_calibration(const std::filesystem::path& path) {
  return calibration_from_json(config_detail::read_json_file(path));
}

}  // namespace vflock
