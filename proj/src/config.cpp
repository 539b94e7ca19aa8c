#include "hybridkin/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hybridkin::config {

using nlohmann::json;

namespace {
constexpr double kPi = 3.14159265358979323846;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown key \"" + where + it.key() + "\"");
    }
  }
}

double number_at(const json& obj, const std::string& where, const std::string& key,
                 double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError("missing key \"" + where + key + "\"");
    return fallback;
  }
  if (!obj[key].is_number()) throw ConfigError("key \"" + where + key + "\" must be a number");
  return obj[key].get<double>();
}

Vec3 vec3_at(const json& obj, const std::string& where, const std::string& key,
             const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number()) {
    throw ConfigError("key \"" + where + key + "\" must be an array of 3 numbers");
  }
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}
}  // namespace

cc::CCParams RobotConfig::cc_params() const {
  cc::CCParams p;
  p.l_t = tube.length;
  p.EI = tube.elastic_modulus * tube.I_yy;
  p.d_t = tube.diameter;
  p.base = tube.base;
  p.r_d = r_d;  // 0 -> default 2 l_t / pi
  p.n = chain.count;
  p.d_c = chain.ball.diameter;
  return p;
}

RobotConfig parse_robot_config(const std::string& text) {
  json j;
  try {
    j = parse_json(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "", {"tube", "chain", "gravity", "workspace_radius", "assumptions"});

  RobotConfig cfg;
  cfg.gravity = vec3_at(j, "", "gravity", Vec3(-9.81, 0.0, 0.0));
  cfg.r_d = number_at(j, "", "workspace_radius", 0.0);

  if (!j.contains("tube") || !j["tube"].is_object()) throw ConfigError("missing \"tube\" object");
  const json& t = j["tube"];
  reject_unknown(t, "tube.",
                 {"length", "outer_diameter", "inner_diameter", "elastic_modulus",
                  "shear_modulus", "mass_density", "base_position", "precurvature"});
  const double outer = number_at(t, "tube.", "outer_diameter", 4.7e-3);
  const double inner = number_at(t, "tube.", "inner_diameter", 3.4e-3);
  if (!(outer > inner && inner >= 0.0)) {
    throw ConfigError("tube.outer_diameter must exceed tube.inner_diameter");
  }
  cfg.tube = rod::TubeParams::annulus(outer, inner);
  cfg.tube_inner_diameter = inner;
  cfg.tube.length = number_at(t, "tube.", "length", 0.1016, true);
  cfg.tube.elastic_modulus = number_at(t, "tube.", "elastic_modulus", 4.10e9, true);
  cfg.tube.shear_modulus = number_at(t, "tube.", "shear_modulus", 34.13e6, true);
  cfg.tube.mass_density = number_at(t, "tube.", "mass_density", 0.012);
  cfg.tube.base.position = vec3_at(t, "tube.", "base_position", Vec3::Zero());
  if (t.contains("precurvature")) {
    const json& pc = t["precurvature"];
    if (!pc.is_object()) throw ConfigError("tube.precurvature must be an object");
    reject_unknown(pc, "tube.precurvature.", {"enabled", "radius", "plane_angle_deg"});
    bool enabled = pc.contains("enabled") && pc["enabled"].is_boolean() &&
                   pc["enabled"].get<bool>();
    if (pc.contains("enabled") && !pc["enabled"].is_boolean()) {
      throw ConfigError("tube.precurvature.enabled must be a boolean");
    }
    if (enabled) {
      const double radius = number_at(pc, "tube.precurvature.", "radius", 0.0564, true);
      if (radius <= 0.0) throw ConfigError("tube.precurvature.radius must be > 0");
      const double ang = number_at(pc, "tube.precurvature.", "plane_angle_deg", 0.0) * kPi / 180.0;
      cfg.tube.u0 = geom::rot_about_axis(3, ang) * Vec3(0.0, 1.0 / radius, 0.0);
    }
  }
  try {
    cfg.tube.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (!j.contains("chain") || !j["chain"].is_object()) throw ConfigError("missing \"chain\" object");
  const json& ch = j["chain"];
  reject_unknown(ch, "chain.",
                 {"ball_count", "extended", "ball_diameter", "ball_mass", "remanence",
                  "dipole_moment", "sleeve_EI"});
  const double count = number_at(ch, "chain.", "ball_count", 10, true);
  if (count < 1 || count != std::floor(count)) {
    throw ConfigError("chain.ball_count must be a positive integer");
  }
  cfg.chain.count = static_cast<int>(count);
  const double ext = number_at(ch, "chain.", "extended", 4);
  if (ext < 0 || ext > cfg.chain.count || ext != std::floor(ext)) {
    throw ConfigError("chain.extended must be an integer in [0, ball_count]");
  }
  cfg.chain.extended = static_cast<int>(ext);
  const double d_c = number_at(ch, "chain.", "ball_diameter", 3.175e-3, true);
  const double mass = number_at(ch, "chain.", "ball_mass", 0.13e-3, true);
  cfg.chain.sleeve_EI = number_at(ch, "chain.", "sleeve_EI", 0.0);
  if (ch.contains("dipole_moment")) {
    cfg.chain.ball.diameter = d_c;
    cfg.chain.ball.mass = mass;
    cfg.chain.ball.dipole_magnitude = number_at(ch, "chain.", "dipole_moment", 0.0, true);
  } else {
    const double rem = number_at(ch, "chain.", "remanence", 1.32, true);
    cfg.chain.ball = mag::BallParams::from_remanence(rem, d_c, mass);
  }
  try {
    cfg.chain.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("assumptions")) {
    const json& as = j["assumptions"];
    if (!as.is_object()) throw ConfigError("assumptions must be an object");
    for (auto it = as.begin(); it != as.end(); ++it) {
      if (!it.value().is_string()) {
        throw ConfigError("assumptions." + it.key() + " must be a string");
      }
    }
  }
  return cfg;
}

MagnetConfig parse_magnet_config(const std::string& text) {
  json j;
  try {
    j = parse_json(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("magnet config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "", {"kind", "field", "position", "moment_direction", "magnet",
                         "dipole_moment"});
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("magnet config needs string key \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  MagnetConfig out;
  if (kind == "uniform") {
    if (j.contains("position") || j.contains("moment_direction") || j.contains("magnet") ||
        j.contains("dipole_moment")) {
      throw ConfigError("uniform magnet config takes only \"field\"");
    }
    out.source = mag::UniformField{vec3_at(j, "", "field", Vec3::Zero())};
    return out;
  }
  if (kind != "external-dipole") {
    throw ConfigError("magnet kind must be \"external-dipole\" or \"uniform\"");
  }
  if (j.contains("field")) throw ConfigError("external-dipole magnet config takes no \"field\"");
  mag::Dipole d;
  d.position = vec3_at(j, "", "position", Vec3::Zero());
  Vec3 dir = vec3_at(j, "", "moment_direction", Vec3::UnitZ());
  if (dir.norm() < 1e-12) throw ConfigError("moment_direction must be non-zero");
  dir.normalize();
  double moment = 0.0;
  if (j.contains("dipole_moment")) {
    moment = number_at(j, "", "dipole_moment", 0.0, true);
  } else {
    if (!j.contains("magnet") || !j["magnet"].is_object()) {
      throw ConfigError("external-dipole magnet config needs \"magnet\" or \"dipole_moment\"");
    }
    const json& m = j["magnet"];
    reject_unknown(m, "magnet.", {"diameter", "length", "remanence"});
    const double dia = number_at(m, "magnet.", "diameter", 0.0, true);
    const double len = number_at(m, "magnet.", "length", 0.0, true);
    const double rem = number_at(m, "magnet.", "remanence", 0.0, true);
    if (dia <= 0.0 || len <= 0.0 || rem <= 0.0) {
      throw ConfigError("magnet.diameter/length/remanence must be > 0");
    }
    const double volume = kPi / 4.0 * dia * dia * len;
    moment = rem * volume / mag::kMu0;
  }
  if (moment < 0.0) throw ConfigError("dipole_moment must be >= 0");
  d.moment = moment * dir;
  out.source = d;
  out.dipole_moment = moment;
  return out;
}

namespace {
std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

RobotConfig load_robot_config(const std::string& path) {
  return parse_robot_config(read_file(path));
}

MagnetConfig load_magnet_config(const std::string& path) {
  return parse_magnet_config(read_file(path));
}

std::string default_robot_json() {
  return R"json({
  "tube": {
    "length": 0.1016,
    "outer_diameter": 0.0047,
    "inner_diameter": 0.0034,
    "elastic_modulus": 4.10e9,
    "shear_modulus": 34.13e6,
    "mass_density": 0.012,
    "base_position": [0.0, 0.0, 0.0],
    "precurvature": {"enabled": false, "radius": 0.0564, "plane_angle_deg": -26.8}
  },
  "chain": {
    "ball_count": 10,
    "extended": 4,
    "ball_diameter": 0.003175,
    "ball_mass": 0.00013,
    "remanence": 1.32,
    "sleeve_EI": 0.0
  },
  "gravity": [-9.81, 0.0, 0.0],
  "assumptions": {
    "tube_cross_section": "annulus 4.7 mm outer / 3.4 mm bore; A, I, J computed from these; the bore clears the 3.175 mm balls",
    "tube_mass_density": "0.012 kg/m assumed for the PTFE/braid/PEBAX composite",
    "precurvature": "disabled by default; enable to reproduce the relaxed 56.4 mm radius with the -26.8 deg bending-plane offset",
    "gravity_direction": "-x (tendon positioned upwards along +x)"
  }
})json";
}

std::string default_magnet_json() {
  return R"json({
  "kind": "external-dipole",
  "position": [0.0, 0.12, 0.0],
  "moment_direction": [0.0, -1.0, 0.0],
  "magnet": {"diameter": 0.0762, "length": 0.0381, "remanence": 1.48}
})json";
}

}  // namespace hybridkin::config
