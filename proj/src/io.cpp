#include "hybridkin/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Geometry>

#include "json.hpp"

namespace hybridkin::io {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);  // normalize -0
  return buf;
}

namespace {
void append_row(std::string& out, const char* kind, int index, double s_or_i, const Vec3& p,
                double q0, double q1, double q2, double q3) {
  out += kind;
  out += ',' + std::to_string(index);
  out += ',' + format_double(s_or_i);
  out += ',' + format_double(p.x()) + ',' + format_double(p.y()) + ',' + format_double(p.z());
  out += ',' + format_double(q0) + ',' + format_double(q1) + ',' + format_double(q2) + ',' +
         format_double(q3);
  out += '\n';
}
}  // namespace

std::string shape_csv(const hybrid::HybridShape& shape) {
  std::string out = "# hybridkin-shape v1\n";
  out += "kind,index,s_or_i,x,y,z,q0,q1,q2,q3\n";
  for (size_t i = 0; i < shape.rod.samples.size(); ++i) {
    const auto& st = shape.rod.samples[i];
    Eigen::Quaterniond q(st.R);
    if (q.w() < 0.0) q.coeffs() *= -1.0;  // canonical sign
    append_row(out, "rod", static_cast<int>(i), st.s, st.p, q.w(), q.x(), q.y(), q.z());
  }
  for (int i = 0; i < shape.chain.size(); ++i) {
    const Vec3& mu = shape.chain.dipoles[i];
    append_row(out, "ball", i + 1, i + 1, shape.chain.positions[i], mu.x(), mu.y(), mu.z(), 0.0);
  }
  return out;
}

std::string workspace_csv(const std::vector<cc::WorkspaceEntry>& table) {
  std::string out = "# hybridkin-workspace v1\n";
  out += "r,alpha_max,beta_max\n";
  for (const auto& e : table) {
    out += format_double(e.r) + ',' + format_double(e.alpha) + ',' + format_double(e.beta) + '\n';
  }
  return out;
}

std::string diagnostics_json(const hybrid::HybridShape& shape, const std::string& mode,
                             const mag::EnergyBreakdown& energy, double tension, int extended,
                             double dipole_moment) {
  ordered_json j;
  j["mode"] = mode;
  j["converged"] = shape.diagnostics.converged;
  j["iterations"] = shape.diagnostics.iterations;
  j["load_residual"] = shape.diagnostics.load_residual;
  j["rod_residual"] = shape.diagnostics.rod_residual;
  j["chain_gradient_norm"] = shape.diagnostics.chain_gradient_norm;
  j["tension"] = tension;
  j["extended"] = extended;
  j["ball_dipole_moment"] = dipole_moment;
  j["energy"] = {{"U_e", energy.U_e},
                 {"U_b", energy.U_b},
                 {"U_g", energy.U_g},
                 {"U_s", energy.U_s},
                 {"U_total", energy.U_total}};
  j["tip"] = ordered_json::object();
  if (!shape.rod.samples.empty()) {
    j["tip"]["rod"] = {shape.rod.tip().p.x(), shape.rod.tip().p.y(), shape.rod.tip().p.z()};
  }
  if (shape.chain.size() > 0) {
    const Vec3& t = shape.chain.positions.back();
    j["tip"]["chain"] = {t.x(), t.y(), t.z()};
  }
  return j.dump(2) + "\n";
}

std::string ik_json(const cc::IKSolution& sol) {
  ordered_json j;
  j["feasible"] = true;
  j["tension"] = sol.tension;
  j["phi"] = sol.phi;
  j["b_hat"] = {sol.b_hat.x(), sol.b_hat.y(), sol.b_hat.z()};
  j["k"] = sol.k;
  j["rho"] = std::isfinite(sol.rho) ? ordered_json(sol.rho) : ordered_json();
  j["n_e"] = sol.n_e;
  j["p_i"] = {sol.p_i.x(), sol.p_i.y(), sol.p_i.z()};
  j["s_star"] = sol.s_star;
  j["arc_length"] = sol.arc_length;
  j["alpha_g"] = sol.alpha_g;
  j["beta_g"] = sol.beta_g;
  j["within_angle_range"] = sol.within_angle_range;
  return j.dump(2) + "\n";
}

std::string infeasible_json(const std::string& reason) {
  ordered_json j;
  j["feasible"] = false;
  j["reason"] = reason;
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace hybridkin::io
