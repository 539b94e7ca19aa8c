#pragma once

#include <string>
#include <vector>

#include "hybridkin/config.hpp"

namespace hybridkin::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Built-in verification suite run against a robot configuration: gradient
/// checks, round trips and oracle comparisons. Model-validity checks only —
/// parameter plausibility is not judged.
std::vector<CheckResult> run_all(const config::RobotConfig& cfg);

}  // namespace hybridkin::checks
