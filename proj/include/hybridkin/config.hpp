#pragma once

#include <string>

#include "hybridkin/chain.hpp"
#include "hybridkin/closedform.hpp"
#include "hybridkin/cosserat.hpp"
#include "hybridkin/magnetics.hpp"

namespace hybridkin::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Robot description: tube + chain + gravity. Parsing is strict: unknown
/// keys are rejected with the offending key named in the error.
struct RobotConfig {
  rod::TubeParams tube;
  double tube_inner_diameter = 3.4e-3;  // bore [m], documented assumption
  chain::ChainParams chain;
  Vec3 gravity{-9.81, 0.0, 0.0};
  double r_d = 0.0;  // optional workspace radius override; 0 -> 2 l_t / pi

  cc::CCParams cc_params() const;
};

struct MagnetConfig {
  mag::FieldSource source;
  double dipole_moment = 0.0;  // echo for diagnostics (external-dipole kind)
};

RobotConfig load_robot_config(const std::string& path);
MagnetConfig load_magnet_config(const std::string& path);

RobotConfig parse_robot_config(const std::string& text);
MagnetConfig parse_magnet_config(const std::string& text);

/// Default bench configuration files shipped under configs/.
std::string default_robot_json();
std::string default_magnet_json();

}  // namespace hybridkin::config
