#pragma once

#include <string>

#include "hybridkin/closedform.hpp"
#include "hybridkin/hybrid.hpp"

namespace hybridkin::io {

/// Shape CSV ("# hybridkin-shape v1"): one row per rod sample and per ball.
/// Columns kind,index,s_or_i,x,y,z,q0,q1,q2,q3 — rod rows carry the
/// orientation quaternion (w,x,y,z), ball rows the dipole vector in
/// q0..q2 (q3 = 0). Output is byte-stable for identical inputs.
std::string shape_csv(const hybrid::HybridShape& shape);

/// Workspace CSV ("# hybridkin-workspace v1"): r,alpha_max,beta_max rows.
std::string workspace_csv(const std::vector<cc::WorkspaceEntry>& table);

std::string diagnostics_json(const hybrid::HybridShape& shape, const std::string& mode,
                             const mag::EnergyBreakdown& energy, double tension, int extended,
                             double dipole_moment);

std::string ik_json(const cc::IKSolution& sol);
std::string infeasible_json(const std::string& reason);

std::string format_double(double v);

void write_file(const std::string& path, const std::string& content);

}  // namespace hybridkin::io
