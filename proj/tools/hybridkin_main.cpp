#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hybridkin/checks.hpp"
#include "hybridkin/closedform.hpp"
#include "hybridkin/config.hpp"
#include "hybridkin/hybrid.hpp"
#include "hybridkin/io.hpp"

namespace {

using namespace hybridkin;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCheckFailed = 4;

struct Vec3Flag {
  double x = 0.0, y = 0.0, z = 0.0;
  Vec3 vec() const { return Vec3(x, y, z); }
};

bool parse_vec3(const std::string& s, Vec3Flag& out) {
  return std::sscanf(s.c_str(), "%lf,%lf,%lf", &out.x, &out.y, &out.z) == 3;
}

int cmd_solve(const std::string& config_path, const std::string& magnet_path, double tension,
              double roll, int extended, bool coupled, const std::string& out_path) {
  config::RobotConfig cfg;
  mag::FieldSource src = mag::UniformField{};
  double magnet_moment = 0.0;
  try {
    cfg = config::load_robot_config(config_path);
    if (!magnet_path.empty()) {
      const auto m = config::load_magnet_config(magnet_path);
      src = m.source;
      magnet_moment = m.dipole_moment;
    }
    if (tension < 0.0) throw config::ConfigError("--tension must be >= 0");
    if (extended < 0 || extended > cfg.chain.count) {
      throw config::ConfigError("--extended must be in [0, ball_count]");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  (void)magnet_moment;

  hybrid::ActuationInput in;
  in.tension = tension;
  in.base_roll = roll;
  in.source = src;
  in.gravity = cfg.gravity;
  in.extended = extended;

  hybrid::HybridShape shape;
  bool have_chain = true;
  int exit_code = kExitOk;
  try {
    shape = coupled ? hybrid::solve_coupled(cfg.tube, cfg.chain, in)
                    : hybrid::solve_decoupled(cfg.tube, cfg.chain, in);
  } catch (const hybrid::CoupledFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    shape = e.last;
    exit_code = kExitNoConvergence;
  } catch (const chain::MinimizeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    shape.chain = e.best.config;
    shape.diagnostics.chain_energy = e.best.energy;
    shape.diagnostics.chain_gradient_norm = e.best.gradient_norm;
    exit_code = kExitNoConvergence;
  } catch (const rod::ShootingFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    shape.rod = e.best;
    shape.diagnostics.rod_residual = e.residual;
    have_chain = false;
    exit_code = kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  chain::ChainParams cp = cfg.chain;
  cp.extended = extended;
  mag::EnergyBreakdown energy;
  if (have_chain && shape.chain.size() > 0) {
    energy = mag::chain_energy(shape.chain, src, cp.ball, cfg.gravity, cp.sleeve_EI, cp.extended);
  }
  try {
    io::write_file(out_path, io::shape_csv(shape));
    io::write_file(out_path + ".diag.json",
                   io::diagnostics_json(shape, coupled ? "coupled" : "decoupled", energy, tension,
                                        extended, cfg.chain.ball.dipole_magnitude));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return exit_code;
}

int cmd_forward(const std::string& config_path, const std::string& ik_path,
                std::optional<double> phi, std::optional<double> kappa,
                std::optional<Vec3Flag> bdir, std::optional<double> extension,
                const std::string& out_path) {
  try {
    const auto cfg = config::load_robot_config(config_path);
    cc::CCParams p = cfg.cc_params();
    double use_phi = 0.0, use_kappa = 0.0, use_ext = 0.0;
    Vec3 use_b = Vec3::UnitZ();
    if (!ik_path.empty()) {
      std::ifstream in(ik_path);
      if (!in) throw config::ConfigError("cannot open IK file: " + ik_path);
      nlohmann::json j = nlohmann::json::parse(in);
      if (!j.value("feasible", false)) throw config::ConfigError("IK file reports infeasible");
      use_phi = j.at("phi").get<double>();
      const double k = j.at("k").get<double>();
      const double arc = j.at("arc_length").get<double>();
      if (k > 0.0) {
        p.l_t = arc;
        use_kappa = k / arc;
      }
      const auto& b = j.at("b_hat");
      use_b = Vec3(b[0].get<double>(), b[1].get<double>(), b[2].get<double>());
      use_ext = j.at("s_star").get<double>();
    } else {
      if (!phi || !kappa || !bdir || !extension) {
        throw config::ConfigError("forward needs --ik or all of --phi --kappa --bdir --extension");
      }
      use_phi = *phi;
      use_kappa = *kappa;
      use_b = bdir->vec();
      if (use_b.norm() < 1e-12) throw config::ConfigError("--bdir must be non-zero");
      use_b.normalize();
      use_ext = *extension;
      if (use_ext < 0.0) throw config::ConfigError("--extension must be >= 0");
      if (use_kappa < 0.0) throw config::ConfigError("--kappa must be >= 0");
    }
    const auto line = cc::forward_hybrid_cc(p, use_phi, use_kappa, use_b, use_ext);
    nlohmann::ordered_json j;
    j["tip"] = {line.tip.x(), line.tip.y(), line.tip.z()};
    j["tangent"] = {line.tangent.x(), line.tangent.y(), line.tangent.z()};
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      io::write_file(out_path, text);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_inverse(const std::string& config_path, const Vec3Flag& target, const Vec3Flag& direction,
                const std::string& out_path) {
  config::RobotConfig cfg;
  Vec3 v;
  try {
    cfg = config::load_robot_config(config_path);
    v = direction.vec();
    if (v.norm() < 1e-12) throw config::ConfigError("--direction must be non-zero");
    v.normalize();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const auto sol = cc::inverse_kinematics(target.vec(), v, cfg.cc_params());
    const std::string text = io::ik_json(sol);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      io::write_file(out_path, text);
    }
    return kExitOk;
  } catch (const cc::InfeasibleTarget& e) {
    const std::string text = io::infeasible_json(e.reason);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      try {
        io::write_file(out_path, text);
      } catch (const std::exception& we) {
        std::cerr << "error: " << we.what() << "\n";
        return kExitConfig;
      }
    }
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_workspace(const std::string& config_path, int samples, double r_min,
                  std::optional<double> r_max, const std::string& out_path) {
  try {
    const auto cfg = config::load_robot_config(config_path);
    const cc::CCParams p = cfg.cc_params();
    if (samples < 2) throw config::ConfigError("--samples must be >= 2");
    const double hi = r_max.value_or(p.radial_limit() + p.n * p.d_c);
    const auto table = cc::workspace_sweep(p, r_min, hi, samples);
    io::write_file(out_path, io::workspace_csv(table));
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_check(const std::string& config_path) {
  config::RobotConfig cfg;
  try {
    cfg = config::load_robot_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto results = checks::run_all(cfg);
  size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.detail.c_str());
  }
  std::printf("%zu/%zu checks passed\n",
              static_cast<size_t>(std::count_if(results.begin(), results.end(),
                                                [](const auto& r) { return r.pass; })),
              results.size());
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static shape, kinematics and dexterous workspace of a hybrid "
               "tendon/ball-chain continuum robot"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve the tube + chain static equilibrium");
  std::string s_config, s_magnet, s_out = "shape.csv";
  double s_tension = 0.0, s_roll = 0.0;
  int s_extended = 0;
  bool s_coupled = false, s_decoupled = false;
  solve->add_option("--config", s_config, "")->required()->check(CLI::ExistingFile);
  solve->add_option("--magnet", s_magnet, "magnet config (omit for zero field)")
      ->check(CLI::ExistingFile);
  solve->add_option("--tension", s_tension, "tendon tension [N]");
  solve->add_option("--roll", s_roll, "base roll phi [rad]");
  solve->add_option("--extended", s_extended, "extended ball count n_e");
  solve->add_flag("--coupled", s_coupled, "iterative coupled solve");
  solve->add_flag("--decoupled", s_decoupled, "single-pass decoupled solve (default)");
  solve->add_option("--out", s_out, "output CSV path (diagnostics to <out>.diag.json)");

  // forward
  auto* forward = app.add_subcommand("forward", "Closed-form hybrid forward kinematics");
  std::string f_config, f_ik, f_out;
  double f_phi = 0.0, f_kappa = 0.0, f_ext = 0.0;
  std::string f_bdir;
  bool f_have_phi = false, f_have_kappa = false, f_have_ext = false;
  forward->add_option("--config", f_config, "")->required()->check(CLI::ExistingFile);
  forward->add_option("--ik", f_ik, "IK solution JSON produced by `inverse`")
      ->check(CLI::ExistingFile);
  forward->add_option("--phi", f_phi)->each([&](const std::string&) { f_have_phi = true; });
  forward->add_option("--kappa", f_kappa)->each([&](const std::string&) { f_have_kappa = true; });
  forward->add_option("--bdir", f_bdir, "chain direction x,y,z");
  forward->add_option("--extension", f_ext, "chain extension [m]")
      ->each([&](const std::string&) { f_have_ext = true; });
  forward->add_option("--out", f_out, "output JSON path (stdout when omitted)");

  // inverse
  auto* inverse = app.add_subcommand("inverse", "Closed-form inverse kinematics");
  std::string i_config, i_out, i_target, i_direction;
  inverse->add_option("--config", i_config, "")->required()->check(CLI::ExistingFile);
  inverse->add_option("--target", i_target, "goal position x,y,z [m]")->required();
  inverse->add_option("--direction", i_direction, "approach direction x,y,z")->required();
  inverse->add_option("--out", i_out, "output JSON path (stdout when omitted)");

  // workspace
  auto* workspace = app.add_subcommand("workspace", "Dexterous workspace sweep");
  std::string w_config, w_out = "workspace.csv";
  int w_samples = 200;
  double w_rmin = 0.0, w_rmax = -1.0;
  workspace->add_option("--config", w_config, "")->required()->check(CLI::ExistingFile);
  workspace->add_option("--samples", w_samples, "row count");
  workspace->add_option("--rmin", w_rmin, "sweep start [m]");
  workspace->add_option("--rmax", w_rmax, "sweep end [m] (default r_d + n d_c)");
  workspace->add_option("--out", w_out, "output CSV path");

  // check
  auto* check = app.add_subcommand("check", "Run the built-in verification suite");
  std::string c_config;
  check->add_option("--config", c_config, "")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  if (solve->parsed()) {
    if (s_coupled && s_decoupled) {
      std::cerr << "error: --coupled and --decoupled are mutually exclusive\n";
      return kExitConfig;
    }
    return cmd_solve(s_config, s_magnet, s_tension, s_roll, s_extended, s_coupled, s_out);
  }
  if (forward->parsed()) {
    std::optional<Vec3Flag> bdir;
    if (!f_bdir.empty()) {
      Vec3Flag v;
      if (!parse_vec3(f_bdir, v)) {
        std::cerr << "error: --bdir must be x,y,z\n";
        return kExitConfig;
      }
      bdir = v;
    }
    return cmd_forward(f_config, f_ik, f_have_phi ? std::optional<double>(f_phi) : std::nullopt,
                       f_have_kappa ? std::optional<double>(f_kappa) : std::nullopt, bdir,
                       f_have_ext ? std::optional<double>(f_ext) : std::nullopt, f_out);
  }
  if (inverse->parsed()) {
    Vec3Flag target, direction;
    if (!parse_vec3(i_target, target) || !parse_vec3(i_direction, direction)) {
      std::cerr << "error: --target/--direction must be x,y,z\n";
      return kExitConfig;
    }
    return cmd_inverse(i_config, target, direction, i_out);
  }
  if (workspace->parsed()) {
    return cmd_workspace(w_config, w_samples, w_rmin,
                         w_rmax > 0.0 ? std::optional<double>(w_rmax) : std::nullopt, w_out);
  }
  if (check->parsed()) {
    return cmd_check(c_config);
  }
  return kExitConfig;
}
