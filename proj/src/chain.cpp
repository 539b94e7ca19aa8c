#include "hybridkin/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybridkin::chain {

using geom::any_orthogonal;
using geom::exp_so3;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Free-variable layout. Balls [first_var, n) carry one link direction
// (offset from the previous ball) and one unit dipole direction each.
struct Layout {
  int n = 0;
  int fixed = 0;      // balls frozen by constraints
  int first_var = 0;  // max(fixed, 1): ball 0 is pinned when nothing is fixed
  int K = 0;          // balls with variables
  int dim() const { return 4 * K; }
};

Layout layout_of(const ChainConstraints& c, const ChainParams& p) {
  Layout l;
  l.n = p.count;
  l.fixed = c.fixed_count;
  l.first_var = std::max(c.fixed_count, 1);
  l.K = std::max(0, l.n - l.first_var);
  return l;
}

// Directions of the free part: K link directions and K dipole directions.
struct Directions {
  std::vector<Vec3> link;
  std::vector<Vec3> dip;
};

Vec3 safe_unit(const Vec3& v, const Vec3& fallback) {
  const double n = v.norm();
  return (n > 1e-14) ? Vec3(v / n) : fallback;
}

Directions directions_from_config(const ChainConfig& cfg, const ChainConstraints& c,
                                  const ChainParams& p) {
  const Layout l = layout_of(c, p);
  Directions d;
  d.link.reserve(l.K);
  d.dip.reserve(l.K);
  for (int i = l.first_var; i < l.n; ++i) {
    const Vec3 link = safe_unit(cfg.positions[i] - cfg.positions[i - 1], Vec3::UnitZ());
    d.link.push_back(link);
    d.dip.push_back(safe_unit(cfg.dipoles[i], link));
  }
  return d;
}

ChainConfig config_from_directions(const Directions& d, const ChainConstraints& c,
                                   const ChainParams& p) {
  const Layout l = layout_of(c, p);
  ChainConfig cfg;
  cfg.positions.resize(l.n);
  cfg.dipoles.resize(l.n);
  for (int i = 0; i < l.fixed; ++i) {
    cfg.positions[i] = c.fixed_positions[i];
    cfg.dipoles[i] = c.fixed_dipoles[i];
  }
  if (l.fixed == 0 && l.n > 0) {
    cfg.positions[0] = c.anchor;
    cfg.dipoles[0] = p.ball.dipole_magnitude * c.anchor_tangent.normalized();
  }
  for (int k = 0; k < l.K; ++k) {
    const int i = l.first_var + k;
    cfg.positions[i] = cfg.positions[i - 1] + p.ball.diameter * d.link[k];
    cfg.dipoles[i] = p.ball.dipole_magnitude * d.dip[k];
  }
  return cfg;
}

// Deterministic tangent frame (a1, a2) orthogonal to w.
void tangent_frame(const Vec3& w, Vec3& a1, Vec3& a2) {
  a1 = any_orthogonal(w);
  a2 = w.normalized().cross(a1);
}

Directions apply_step(const Directions& d, const Eigen::VectorXd& dx) {
  Directions out = d;
  const int K = static_cast<int>(d.link.size());
  for (int k = 0; k < K; ++k) {
    Vec3 a1, a2;
    tangent_frame(d.link[k], a1, a2);
    out.link[k] = exp_so3(dx[2 * k] * a1 + dx[2 * k + 1] * a2) * d.link[k];
    tangent_frame(d.dip[k], a1, a2);
    out.dip[k] = exp_so3(dx[2 * K + 2 * k] * a1 + dx[2 * K + 2 * k + 1] * a2) * d.dip[k];
  }
  return out;
}

double energy_of(const ChainConfig& cfg, const mag::FieldSource& src, const Vec3& gravity,
                 const ChainParams& p) {
  return mag::chain_energy(cfg, src, p.ball, gravity, p.sleeve_EI, p.extended).U_total;
}

// Analytic gradient in the tangent coordinates of `d`.
Eigen::VectorXd gradient_of(const Directions& d, const ChainConfig& cfg,
                            const ChainConstraints& c, const mag::FieldSource& src,
                            const Vec3& gravity, const ChainParams& p) {
  const Layout l = layout_of(c, p);
  const int n = l.n;
  const double mu = p.ball.dipole_magnitude;
  const double d_c = p.ball.diameter;

  // dU/dp_i and total field at each ball (for dU/dmu_i = -B_tot).
  std::vector<Vec3> dU_dp(n, Vec3::Zero());
  std::vector<Vec3> B_tot(n, Vec3::Zero());
  for (int i = 0; i < n; ++i) {
    B_tot[i] = mag::source_field(src, cfg.positions[i]);
    dU_dp[i] = -mag::magnetic_force(cfg.dipoles[i],
                                    mag::source_field_gradient(src, cfg.positions[i]))
               - p.ball.mass * gravity;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec3 r = cfg.positions[i] - cfg.positions[j];
      B_tot[i] += mag::dipole_field(r, cfg.dipoles[j]);
      B_tot[j] += mag::dipole_field(-r, cfg.dipoles[i]);
      const Vec3 f_ij =
          mag::magnetic_force(cfg.dipoles[i], mag::dipole_field_gradient(r, cfg.dipoles[j]));
      dU_dp[i] -= f_ij;
      dU_dp[j] += f_ij;
    }
  }

  // Ambient-space gradients per link (chain rule: link k moves balls >= its
  // ball index) and per dipole direction.
  std::vector<Vec3> gl(l.K, Vec3::Zero());
  std::vector<Vec3> gm(l.K, Vec3::Zero());
  Vec3 suffix = Vec3::Zero();
  for (int k = l.K - 1; k >= 0; --k) {
    suffix += dU_dp[l.first_var + k];
    gl[k] = d_c * suffix;
    gm[k] = -mu * B_tot[l.first_var + k];
  }

  // Sleeve term: bend angles at interior extended balls.
  if (p.sleeve_EI != 0.0 && p.extended > 0) {
    const int first = std::max(n - p.extended, 1);
    for (int i = first; i + 1 < n; ++i) {
      const Vec3 tp = safe_unit(cfg.positions[i] - cfg.positions[i - 1], Vec3::UnitZ());
      const Vec3 tn = safe_unit(cfg.positions[i + 1] - cfg.positions[i], Vec3::UnitZ());
      const double cth = std::clamp(tp.dot(tn), -1.0, 1.0);
      const double theta = std::atan2(tp.cross(tn).norm(), cth);
      const double coef = p.sleeve_EI * theta / d_c;
      const Vec3 wp = tn - cth * tp;  // tangent component, |wp| = sin(theta)
      const Vec3 wn = tp - cth * tn;
      if (wp.norm() > 1e-14) {
        const int kp = i - l.first_var;      // link (i-1 -> i)
        const int kn = i + 1 - l.first_var;  // link (i -> i+1)
        if (kp >= 0) gl[kp] -= coef * wp.normalized();
        if (kn >= 0 && kn < l.K) gl[kn] -= coef * wn.normalized();
      }
    }
  }

  Eigen::VectorXd g(l.dim());
  for (int k = 0; k < l.K; ++k) {
    Vec3 a1, a2;
    tangent_frame(d.link[k], a1, a2);
    g[2 * k] = a1.cross(d.link[k]).dot(gl[k]);
    g[2 * k + 1] = a2.cross(d.link[k]).dot(gl[k]);
    tangent_frame(d.dip[k], a1, a2);
    g[2 * l.K + 2 * k] = a1.cross(d.dip[k]).dot(gm[k]);
    g[2 * l.K + 2 * k + 1] = a2.cross(d.dip[k]).dot(gm[k]);
  }
  return g;
}

Eigen::VectorXd fd_gradient(const Directions& d, const ChainConstraints& c,
                            const mag::FieldSource& src, const Vec3& gravity,
                            const ChainParams& p) {
  const int dim = 4 * static_cast<int>(d.link.size());
  const double h = 1e-6;
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(dim);
    dx[i] = h;
    const double up = energy_of(config_from_directions(apply_step(d, dx), c, p), src, gravity, p);
    dx[i] = -h;
    const double um = energy_of(config_from_directions(apply_step(d, dx), c, p), src, gravity, p);
    g[i] = (up - um) / (2.0 * h);
  }
  return g;
}

struct LocalResult {
  MinimizeResult res;
  bool converged = false;
};

LocalResult minimize_single(const ChainConfig& guess, const ChainConstraints& c,
                            const mag::FieldSource& src, const Vec3& gravity,
                            const ChainParams& p, const MinimizeSettings& s) {
  Directions d = directions_from_config(guess, c, p);
  const int dim = 4 * static_cast<int>(d.link.size());

  LocalResult out;
  if (dim == 0) {
    out.res.config = config_from_directions(d, c, p);
    out.res.energy = energy_of(out.res.config, src, gravity, p);
    out.converged = true;
    return out;
  }

  ChainConfig cfg = config_from_directions(d, c, p);
  double U = energy_of(cfg, src, gravity, p);
  Eigen::VectorXd g = s.fd_gradient ? fd_gradient(d, c, src, gravity, p)
                                    : gradient_of(d, cfg, c, src, gravity, p);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
  int iter = 0;
  bool converged = g.norm() < s.tolerance;
  while (!converged && iter < s.max_iterations) {
    Eigen::VectorXd dir = -(H * g);
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      dir = -g;
    }
    const double dn = dir.norm();
    if (dn > 1.0) dir *= 1.0 / dn;  // cap step at 1 rad

    const double slope = dir.dot(g);
    double alpha = 1.0;
    bool accepted = false;
    ChainConfig cfg_new;
    Directions d_new;
    double U_new = U;
    for (int ls = 0; ls < 50; ++ls) {
      d_new = apply_step(d, alpha * dir);
      cfg_new = config_from_directions(d_new, c, p);
      U_new = energy_of(cfg_new, src, gravity, p);
      if (U_new <= U + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      H.setIdentity();
      break;  // line search exhausted; g stays above tolerance -> not converged
    }

    Eigen::VectorXd g_new = s.fd_gradient ? fd_gradient(d_new, c, src, gravity, p)
                                          : gradient_of(d_new, cfg_new, c, src, gravity, p);
    // BFGS inverse update in the re-anchored chart (transport approximated
    // by identity; steps are small near convergence).
    const Eigen::VectorXd step = alpha * dir;
    const Eigen::VectorXd y = g_new - g;
    const double sy = step.dot(y);
    if (sy > 1e-18 * step.norm() * y.norm()) {
      const Eigen::VectorXd Hy = H * y;
      const double c1 = (sy + y.dot(Hy)) / (sy * sy);
      H += c1 * step * step.transpose() -
           (Hy * step.transpose() + step * Hy.transpose()) / sy;
    } else {
      H.setIdentity();
    }

    d = d_new;
    cfg = cfg_new;
    U = U_new;
    g = g_new;
    ++iter;
    converged = g.norm() < s.tolerance;
  }

  out.res.config = cfg;
  out.res.energy = U;
  out.res.gradient_norm = g.norm();
  out.res.iterations = iter;
  out.converged = converged;
  return out;
}

// Restart guess: free sub-chain rotated rigidly about the anchor ball.
ChainConfig bent_guess(const ChainConfig& guess, const ChainConstraints& c, const ChainParams& p,
                       const mag::FieldSource& src, double angle) {
  const Layout l = layout_of(c, p);
  const Vec3 pivot = (l.fixed > 0) ? c.fixed_positions[l.fixed - 1] : c.anchor;
  const Vec3 t0 = (l.fixed > 0) ? safe_unit(c.fixed_dipoles[l.fixed - 1], Vec3::UnitZ())
                                : c.anchor_tangent.normalized();
  Vec3 B = mag::source_field(src, pivot);
  Vec3 axis;
  if (B.norm() < 1e-15) {
    axis = any_orthogonal(t0);
  } else {
    const Vec3 cr = t0.cross(B.normalized());
    axis = (cr.norm() > 1e-12) ? Vec3(cr.normalized()) : any_orthogonal(t0);
  }
  const Mat3 R = exp_so3(angle * axis);
  ChainConfig out = guess;
  for (int i = l.first_var; i < l.n; ++i) {
    out.positions[i] = pivot + R * (guess.positions[i] - pivot);
    out.dipoles[i] = R * guess.dipoles[i];
  }
  return out;
}

}  // namespace

void ChainParams::validate() const {
  if (count < 1) throw std::invalid_argument("ChainParams: count must be >= 1");
  if (extended < 0 || extended > count) {
    throw std::invalid_argument("ChainParams: extended must be in [0, count]");
  }
  if (ball.diameter <= 0.0) throw std::invalid_argument("ChainParams: ball diameter must be > 0");
  if (ball.mass < 0.0) throw std::invalid_argument("ChainParams: ball mass must be >= 0");
  if (ball.dipole_magnitude < 0.0) {
    throw std::invalid_argument("ChainParams: dipole magnitude must be >= 0");
  }
  if (sleeve_EI < 0.0) throw std::invalid_argument("ChainParams: sleeve_EI must be >= 0");
}

double constraint_residual(const ChainConfig& config, const ChainParams& params) {
  double worst = 0.0;
  for (int i = 1; i < config.size(); ++i) {
    const double gap = (config.positions[i] - config.positions[i - 1]).norm();
    worst = std::max(worst, std::abs(gap - params.ball.diameter));
  }
  const double mu = params.ball.dipole_magnitude;
  for (int i = 0; i < config.size(); ++i) {
    const double err = std::abs(config.dipoles[i].norm() - mu);
    worst = std::max(worst, (mu > 0.0) ? err / mu : err);
  }
  return worst;
}

ChainConfig init_chain_guess(const rod::RodShape& rod, const ChainParams& params) {
  params.validate();
  const int n = params.count;
  const int n_int = n - params.extended;
  const double d_c = params.ball.diameter;
  if (n_int > 0 && rod.length() < n_int * d_c) {
    throw std::invalid_argument("init_chain_guess: rod too short for the internal balls");
  }

  ChainConfig cfg;
  cfg.positions.resize(n);
  cfg.dipoles.resize(n);
  const Vec3 tip = rod.tip().p;
  const Vec3 tip_tan = rod.tip_tangent();
  const double mu = params.ball.dipole_magnitude;

  if (n_int > 0) {
    cfg.positions[n_int - 1] = tip;
    cfg.dipoles[n_int - 1] = mu * tip_tan;
    // Walk backwards along the sampled centerline placing each ball at exact
    // chord distance d_c from the previous one.
    int seg = static_cast<int>(rod.samples.size()) - 1;  // segment [seg-1, seg]
    Vec3 prev = tip;
    for (int k = n_int - 2; k >= 0; --k) {
      bool placed = false;
      while (seg >= 1) {
        const Vec3& a = rod.samples[seg - 1].p;
        const Vec3& b = rod.samples[seg].p;
        // x(t) = b + t (a - b), t in [0, 1]; need |x - prev| = d_c with x
        // not beyond points already consumed.
        const Vec3 e = a - b;
        const Vec3 w = b - prev;
        const double A = e.squaredNorm();
        const double B = 2.0 * e.dot(w);
        const double C = w.squaredNorm() - d_c * d_c;
        const double disc = B * B - 4.0 * A * C;
        if (A > 0.0 && disc >= 0.0) {
          // smallest t in [0,1] reaching distance d_c while moving backwards
          const double sq = std::sqrt(disc);
          double t = (-B - sq) / (2.0 * A);
          if (t < 0.0) t = (-B + sq) / (2.0 * A);
          if (t >= -1e-12 && t <= 1.0 + 1e-12) {
            t = std::clamp(t, 0.0, 1.0);
            const Vec3 x = b + t * e;
            const double s_here =
                rod.samples[seg].s + t * (rod.samples[seg - 1].s - rod.samples[seg].s);
            cfg.positions[k] = x;
            cfg.dipoles[k] = mu * rod.tangent_at(s_here);
            prev = x;
            placed = true;
            break;
          }
        }
        --seg;
      }
      if (!placed) {
        throw std::invalid_argument("init_chain_guess: rod too short for the internal balls");
      }
    }
    // Exact contact for the resampled points.
    for (int k = n_int - 2; k >= 0; --k) {
      const Vec3 dir = safe_unit(cfg.positions[k] - cfg.positions[k + 1], -tip_tan);
      cfg.positions[k] = cfg.positions[k + 1] + d_c * dir;
    }
  }

  const Vec3 start = (n_int > 0) ? tip : rod.tip().p;
  for (int j = std::max(n_int, 0); j < n; ++j) {
    const int steps_out = j - n_int + 1;
    cfg.positions[j] = start + steps_out * d_c * tip_tan;
    cfg.dipoles[j] = mu * tip_tan;
  }
  return cfg;
}

ChainConstraints constraints_from_guess(const ChainConfig& guess, const ChainParams& params) {
  ChainConstraints c;
  c.fixed_count = params.count - params.extended;
  c.fixed_positions.assign(guess.positions.begin(), guess.positions.begin() + c.fixed_count);
  c.fixed_dipoles.assign(guess.dipoles.begin(), guess.dipoles.begin() + c.fixed_count);
  if (c.fixed_count > 0) {
    c.anchor = c.fixed_positions.back();
    c.anchor_tangent = safe_unit(c.fixed_dipoles.back(), Vec3::UnitZ());
  } else {
    c.anchor = guess.positions.front();
    c.anchor_tangent = safe_unit(guess.dipoles.front(),
                                 safe_unit(guess.positions[1] - guess.positions[0], Vec3::UnitZ()));
  }
  return c;
}

int free_coordinate_count(const ChainConstraints& constraints, const ChainParams& params) {
  return layout_of(constraints, params).dim();
}

ChainConfig retract(const ChainConfig& config, const ChainConstraints& constraints,
                    const ChainParams& params, const Eigen::VectorXd& dx) {
  Directions d = directions_from_config(config, constraints, params);
  return config_from_directions(apply_step(d, dx), constraints, params);
}

std::pair<double, Eigen::VectorXd> energy_and_gradient(const ChainConfig& config,
                                                       const ChainConstraints& constraints,
                                                       const mag::FieldSource& src,
                                                       const Vec3& gravity,
                                                       const ChainParams& params) {
  Directions d = directions_from_config(config, constraints, params);
  const ChainConfig cfg = config_from_directions(d, constraints, params);
  const double U = energy_of(cfg, src, gravity, params);
  return {U, gradient_of(d, cfg, constraints, src, gravity, params)};
}

MinimizeResult minimize_energy(const ChainConfig& guess, const ChainConstraints& constraints,
                               const mag::FieldSource& src, const Vec3& gravity,
                               const ChainParams& params, const MinimizeSettings& settings) {
  params.validate();
  if (guess.size() != params.count) {
    throw std::invalid_argument("minimize_energy: guess size does not match params.count");
  }

  std::vector<ChainConfig> starts{guess};
  if (settings.multistart) {
    starts.push_back(bent_guess(guess, constraints, params, src, +settings.restart_angle));
    starts.push_back(bent_guess(guess, constraints, params, src, -settings.restart_angle));
  }

  std::optional<LocalResult> best;
  for (const auto& start : starts) {
    LocalResult r = minimize_single(start, constraints, src, gravity, params, settings);
    if (!best || r.res.energy < best->res.energy) best = r;
  }
  if (!best->converged) {
    throw MinimizeFailure("minimize_energy: gradient tolerance not reached (|g| = " +
                              std::to_string(best->res.gradient_norm) + ")",
                          best->res);
  }
  return best->res;
}

ChainConfig brute_force_min(const ChainConfig& guess, const ChainConstraints& constraints,
                            const mag::FieldSource& src, const Vec3& gravity,
                            const ChainParams& params, double resolution, bool aligned_dipoles) {
  params.validate();
  if (resolution <= 0.0) throw std::invalid_argument("brute_force_min: resolution must be > 0");
  const Layout l = layout_of(constraints, params);
  const int free_balls = l.n - l.fixed;
  if (free_balls > 2) {
    throw std::invalid_argument("brute_force_min: too many free balls (max 2)");
  }

  Directions d = directions_from_config(guess, constraints, params);
  if (l.K == 0) return config_from_directions(d, constraints, params);

  const int n_theta = static_cast<int>(std::floor(kPi / resolution + 1e-9)) + 1;
  const int n_psi = std::max(1, static_cast<int>(std::floor(2.0 * kPi / resolution - 1e-9)) + 1);

  auto dir_of = [&](int it, int ip) {
    const double th = std::min(it * resolution, kPi);
    const double ps = ip * resolution;
    return Vec3(std::sin(th) * std::cos(ps), std::sin(th) * std::sin(ps), std::cos(th));
  };

  // Odometer over per-ball angle indices: (theta, psi) for the link and,
  // unless aligned, (theta, psi) for the dipole.
  const int per_ball = aligned_dipoles ? 2 : 4;
  const int dims = per_ball * l.K;
  std::vector<int> idx(dims, 0);
  std::vector<int> lim(dims);
  for (int k = 0; k < l.K; ++k) {
    lim[per_ball * k] = n_theta;
    lim[per_ball * k + 1] = n_psi;
    if (!aligned_dipoles) {
      lim[per_ball * k + 2] = n_theta;
      lim[per_ball * k + 3] = n_psi;
    }
  }

  double best_U = std::numeric_limits<double>::infinity();
  Directions best_d = d;
  Directions trial = d;
  while (true) {
    for (int k = 0; k < l.K; ++k) {
      trial.link[k] = dir_of(idx[per_ball * k], idx[per_ball * k + 1]);
      trial.dip[k] = aligned_dipoles ? trial.link[k]
                                     : dir_of(idx[per_ball * k + 2], idx[per_ball * k + 3]);
    }
    const double U =
        energy_of(config_from_directions(trial, constraints, params), src, gravity, params);
    if (U < best_U) {
      best_U = U;
      best_d = trial;
    }
    int c = dims - 1;
    for (; c >= 0; --c) {
      if (++idx[c] < lim[c]) break;
      idx[c] = 0;
    }
    if (c < 0) break;
  }
  return config_from_directions(best_d, constraints, params);
}

}  // namespace hybridkin::chain
