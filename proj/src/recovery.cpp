#include "gcs/recovery.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {

constexpr double kPi = 3.14159265358979323846;

double objective(const GeneratorSpec& G, const ConditionId& c, const MeasurementPlan& plan,
                 const Eigen::VectorXcd& y, const Eigen::VectorXd& z) {
  Eigen::VectorXcd r = apply(plan, generate(G, z, c)).y - y;
  return r.squaredNorm() / (2.0 * static_cast<double>(y.size()));
}

Eigen::VectorXd gradient(const GeneratorSpec& G, const ConditionId& c,
                         const MeasurementPlan& plan, const Eigen::VectorXcd& y,
                         const Eigen::VectorXd& z) {
  Eigen::VectorXcd r = apply(plan, generate(G, z, c)).y - y;
  Measurements res;
  res.y = r;
  Eigen::VectorXd cot = adjoint(plan, res).data.real() / static_cast<double>(y.size());
  return generate_gradient(G, z, c, cot);
}

Eigen::VectorXd project_ball(Eigen::VectorXd z, double radius) {
  double nz = z.norm();
  if (nz > radius) z *= radius / nz;
  return z;
}

// Scale z along its ray to best fit y; generators are positively homogeneous
// so this is exact line search in t for t >= 0 (and any t for linear classes).
Eigen::VectorXd ray_rescale(const GeneratorSpec& G, const ConditionId& c,
                            const MeasurementPlan& plan, const Eigen::VectorXcd& y,
                            const Eigen::VectorXd& z, double radius) {
  if (z.norm() == 0.0) return z;
  Eigen::VectorXcd ag = apply(plan, generate(G, z, c)).y;
  double denom = ag.squaredNorm();
  if (denom == 0.0) return z;
  double t = ag.dot(y).real() / denom;
  bool linear = std::holds_alternative<LinearClassSpec>(G);
  if (!linear && t < 0.0) t = 0.0;
  return project_ball(t * z, radius);
}

Eigen::VectorXd anchored_init(const GeneratorSpec& G, const ConditionId& c,
                              const MeasurementPlan& plan, const Eigen::VectorXcd& y, Rng& rng) {
  const LatentBall ball = latent_ball(G);
  Measurements meas;
  meas.y = y;
  Eigen::VectorXd anchor = zero_filled(plan, meas).data.real();
  anchor *= static_cast<double>(plan.per_channel_len) / static_cast<double>(plan.m);

  if (const auto* lin = std::get_if<LinearClassSpec>(&G)) {
    Eigen::VectorXd z0 = ball_least_squares(lin->bases.at(c), anchor, ball.radius);
    return ray_rescale(G, c, plan, y, z0, ball.radius);
  }

  LatentLaw uniform{LatentLaw::Kind::uniform_ball};
  Eigen::VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd z = ray_rescale(G, c, plan, y, draw_latent(uniform, ball, rng), ball.radius);
    double obj = objective(G, c, plan, y, z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  // Short anchored descent: pull the best candidate toward the zero-filled
  // signal before measuring again.
  Eigen::VectorXd z = best;
  const double n_total = static_cast<double>(anchor.size());
  for (int s = 0; s < 30; ++s) {
    Eigen::VectorXd g = generate(G, z, c).data.real() - anchor;
    Eigen::VectorXd gz = generate_gradient(G, z, c, g / n_total);
    double gn = gz.norm();
    if (gn == 0.0 || !gz.allFinite()) break;
    if (gn > 1.0) gz *= 1.0 / gn;
    z = project_ball(z - 0.1 * ball.radius * gz, ball.radius);
  }
  z = ray_rescale(G, c, plan, y, z, ball.radius);
  if (objective(G, c, plan, y, z) < best_obj) return z;
  return best;
}

struct RestartOutcome {
  Eigen::VectorXd z;
  double residual = 0.0;
  int steps = 0;
  double max_norm = 0.0;
  std::vector<double> trace;
};

RestartOutcome run_restart(const GeneratorSpec& G, const ConditionId& c,
                           const MeasurementPlan& plan, const Eigen::VectorXcd& y,
                           const RecoveryConfig& cfg, const Eigen::VectorXd& z0, int restart) {
  const double radius = ball_radius(G);
  Eigen::VectorXd z = project_ball(z0, radius);
  Eigen::VectorXd accum = Eigen::VectorXd::Zero(z.size());

  RestartOutcome out;
  out.z = z;
  out.residual = objective(G, c, plan, y, z);
  out.max_norm = z.norm();
  out.trace.push_back(out.residual);

  auto diverged = [&](int step, const char* what) {
    std::ostringstream msg;
    msg << "recover: non-finite " << what << " at restart " << restart << " step " << step
        << " (|z| = " << z.norm() << ")";
    throw DivergenceError(msg.str());
  };

  if (!std::isfinite(out.residual)) diverged(0, "objective");

  double best = out.residual;
  int stagnant = 0;
  for (int step = 0; step < cfg.max_steps; ++step) {
    Eigen::VectorXd g = gradient(G, c, plan, y, z);
    if (!g.allFinite()) diverged(step, "gradient");
    if (cfg.adaptive_scaling) {
      accum += g.cwiseProduct(g);
      g = g.cwiseQuotient((accum.cwiseSqrt().array() + 1e-8).matrix());
    }
    double gn = g.norm();
    if (gn > cfg.grad_clip) g *= cfg.grad_clip / gn;

    double lr = cfg.base_lr;
    if (cfg.lr_schedule == RecoveryConfig::LrSchedule::cosine)
      lr *= 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) /
                                  static_cast<double>(cfg.max_steps)));

    z = project_ball(z - lr * g, radius);
    double obj = objective(G, c, plan, y, z);
    if (!std::isfinite(obj)) diverged(step, "objective");

    out.steps = step + 1;
    out.max_norm = std::max(out.max_norm, z.norm());
    out.trace.push_back(obj);

    if (obj < best * (1.0 - cfg.stagnation_tol))
      stagnant = 0;
    else
      ++stagnant;
    if (obj < out.residual) {
      out.residual = obj;
      out.z = z;
    }
    best = std::min(best, obj);
    if (stagnant >= cfg.patience) break;
  }
  return out;
}

}  // namespace

void validate(const RecoveryConfig& cfg) {
  if (cfg.max_steps <= 0) throw InvalidInputError("recovery config: max_steps must be positive");
  if (!(cfg.base_lr > 0.0) || !std::isfinite(cfg.base_lr))
    throw InvalidInputError("recovery config: base_lr must be positive");
  if (!(cfg.grad_clip > 0.0)) throw InvalidInputError("recovery config: grad_clip must be positive");
  if (cfg.patience <= 0 || cfg.patience > cfg.max_steps)
    throw InvalidInputError("recovery config: patience must be in [1, max_steps]");
  if (cfg.restarts <= 0) throw InvalidInputError("recovery config: restarts must be positive");
  if (!(cfg.stagnation_tol > 0.0))
    throw InvalidInputError("recovery config: stagnation tolerance must be positive");
}

RecoveryResult recover(const GeneratorSpec& G, const ConditionId& c_r,
                       const MeasurementPlan& plan, const Measurements& y,
                       const RecoveryConfig& cfg) {
  validate(cfg);
  validate(plan);
  if (!has_condition(G, c_r)) throw UnknownConditionError("recover: unknown condition " + c_r);
  if (channel_count(G) != plan.channels || signal_len(G) != plan.per_channel_len)
    throw InvalidInputError("recover: generator output shape differs from plan");
  if (y.y.size() != static_cast<Eigen::Index>(plan.channels) * plan.m)
    throw InvalidInputError("recover: measurement length differs from plan");
  if (!y.y.allFinite())
    throw DivergenceError("recover: non-finite measurements, objective undefined");
  if (cfg.init == RecoveryConfig::Init::provided &&
      cfg.provided_init.size() != latent_dim(G))
    throw InvalidInputError("recover: provided init has wrong latent dimension");

  const LatentBall ball = latent_ball(G);
  Rng root(cfg.seed);
  LatentLaw uniform{LatentLaw::Kind::uniform_ball};

  std::vector<RestartOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(cfg.restarts));
  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng = root.derive(static_cast<std::uint64_t>(r));
    Eigen::VectorXd z0;
    if (r == 0 && cfg.init == RecoveryConfig::Init::provided)
      z0 = cfg.provided_init;
    else if (r == 0 && cfg.init == RecoveryConfig::Init::zero_filled)
      z0 = anchored_init(G, c_r, plan, y.y, rng);
    else
      z0 = draw_latent(uniform, ball, rng);
    outcomes.push_back(run_restart(G, c_r, plan, y.y, cfg, z0, r));
  }

  int best = 0;
  double worst = outcomes[0].residual;
  for (int r = 1; r < cfg.restarts; ++r) {
    if (outcomes[static_cast<std::size_t>(r)].residual <
        outcomes[static_cast<std::size_t>(best)].residual)
      best = r;
    worst = std::max(worst, outcomes[static_cast<std::size_t>(r)].residual);
  }

  RestartOutcome& win = outcomes[static_cast<std::size_t>(best)];
  RecoveryResult result;
  result.z_hat = win.z;
  result.f_hat = generate(G, win.z, c_r);
  result.residual = win.residual;
  result.omega_gap = worst - win.residual;
  result.steps_used = win.steps;
  result.restart_index = best;
  result.max_latent_norm = win.max_norm;
  result.trace = std::move(win.trace);
  return result;
}

double recovery_bound(double lambda_star, double gamma, double q, double approx_error,
                      double noise_norm, double omega) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidInputError("recovery_bound: gamma must be positive");
  if (lambda_star < 0.0 || q < 0.0 || approx_error < 0.0 || noise_norm < 0.0 || omega < 0.0)
    throw InvalidInputError("recovery_bound: terms must be nonnegative");
  return (1.0 + 2.0 * std::sqrt(lambda_star) / gamma) * approx_error +
         (2.0 * noise_norm + omega + q) / gamma;
}

double recovery_bound(const CompatibilityReport& lambda_star, double gamma, double q,
                      double approx_error, double noise_norm, double omega) {
  return recovery_bound(lambda_star.value, gamma, q, approx_error, noise_norm, omega);
}

Eigen::VectorXd ball_least_squares(const Eigen::MatrixXd& B, const Eigen::VectorXd& target,
                                   double radius) {
  if (B.rows() != target.size()) throw InvalidInputError("ball_least_squares: shape mismatch");
  if (!(radius > 0.0)) throw InvalidInputError("ball_least_squares: radius must be positive");
  const Eigen::Index k = B.cols();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B.transpose() * B);
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd b = eig.eigenvectors().transpose() * (B.transpose() * target);

  auto solution_norm_sq = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      double denom = lam(i) + nu;
      if (denom > 0.0) s += (b(i) / denom) * (b(i) / denom);
    }
    return s;
  };
  auto assemble = [&](double nu) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      double denom = lam(i) + nu;
      if (denom > 0.0) w(i) = b(i) / denom;
    }
    return Eigen::VectorXd(eig.eigenvectors() * w);
  };

  // Interior case: the (pseudo-inverse) unconstrained solution already fits.
  bool interior = solution_norm_sq(0.0) <= radius * radius;
  for (Eigen::Index i = 0; i < k && interior; ++i)
    if (lam(i) == 0.0 && b(i) != 0.0) interior = false;
  if (interior) return assemble(0.0);

  // ||z(nu)|| is decreasing and ||z(|b|/R)|| <= R, so the root is bracketed.
  double lo = 0.0, hi = std::max(b.norm() / radius, 1e-300);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (solution_norm_sq(mid) > radius * radius)
      lo = mid;
    else
      hi = mid;
  }
  return assemble(hi);
}

double approximation_error(const GeneratorSpec& G, const ConditionId& c_r, const Signal& f_star,
                           int budget) {
  if (!has_condition(G, c_r))
    throw UnknownConditionError("approximation_error: unknown condition " + c_r);
  validate(f_star);
  if (f_star.channels != channel_count(G) || f_star.per_channel_len != signal_len(G))
    throw InvalidInputError("approximation_error: signal shape differs from generator output");
  if (budget <= 0) throw InvalidInputError("approximation_error: budget must be positive");

  const LatentBall ball = latent_ball(G);
  const Eigen::VectorXd re = f_star.data.real();
  const double imag_sq = f_star.data.imag().squaredNorm();

  if (const auto* lin = std::get_if<LinearClassSpec>(&G)) {
    const Eigen::MatrixXd& B = lin->bases.at(c_r);
    Eigen::VectorXd z = ball_least_squares(B, re, ball.radius);
    return std::sqrt((B * z - re).squaredNorm() + imag_sq);
  }

  // Steepest descent with an exact step for the current linear piece and
  // backtracking across piece boundaries.
  auto descend = [&](Eigen::VectorXd z) {
    if (z.norm() > 0.0) {
      Eigen::VectorXd gvec = generate(G, z, c_r).data.real();
      double denom = gvec.squaredNorm();
      if (denom > 0.0) {
        double t = std::max(0.0, gvec.dot(re) / denom);
        z = project_ball(t * z, ball.radius);
      }
    }
    double fz = (generate(G, z, c_r).data.real() - re).squaredNorm();
    for (int step = 0; step < 400; ++step) {
      Eigen::VectorXd resid = generate(G, z, c_r).data.real() - re;
      Eigen::VectorXd g = generate_gradient(G, z, c_r, resid);
      double gn2 = g.squaredNorm();
      if (gn2 <= 1e-30) break;
      Eigen::VectorXd jg = generate_jacobian(G, z, c_r) * g;
      double curv = jg.squaredNorm();
      double alpha = curv > 0.0 ? gn2 / curv : 1.0;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Eigen::VectorXd zc = project_ball(z - alpha * g, ball.radius);
        double fc = (generate(G, zc, c_r).data.real() - re).squaredNorm();
        if (fc < fz) {
          z = zc;
          fz = fc;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    return fz;
  };

  double best_sq = descend(Eigen::VectorXd::Zero(latent_dim(G)));

  // One start per linear piece: the exact in-piece minimizer is the best
  // possible anchor, and for enumerable nets this covers every basin.
  try {
    ConeDecomposition dec = enumerate_cones(G, c_r);
    for (const ConePiece& piece : dec.pieces) {
      Eigen::VectorXd z = ball_least_squares(piece.map, re, ball.radius);
      best_sq = std::min(best_sq, descend(z));
      if (best_sq == 0.0) break;
    }
  } catch (const CapacityError&) {
  }

  LatentLaw uniform{LatentLaw::Kind::uniform_ball};
  Rng root(20250815);
  for (int r = 0; r < budget; ++r) {
    Rng rng = root.derive(static_cast<std::uint64_t>(r));
    best_sq = std::min(best_sq, descend(draw_latent(uniform, ball, rng)));
  }
  return std::sqrt(best_sq + imag_sq);
}

std::string to_json(const RecoveryResult& result, const RecoveryConfig& cfg) {
  nlohmann::json j;
  j["z_hat"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.z_hat.size(); ++i) j["z_hat"].push_back(result.z_hat(i));
  j["residual"] = result.residual;
  j["omega_gap"] = result.omega_gap;
  j["steps_used"] = result.steps_used;
  j["restart_index"] = result.restart_index;
  j["max_latent_norm"] = result.max_latent_norm;
  nlohmann::json c;
  c["max_steps"] = cfg.max_steps;
  c["base_lr"] = cfg.base_lr;
  c["lr_schedule"] = cfg.lr_schedule == RecoveryConfig::LrSchedule::constant ? "constant" : "cosine";
  c["grad_clip"] = cfg.grad_clip;
  c["patience"] = cfg.patience;
  c["restarts"] = cfg.restarts;
  switch (cfg.init) {
    case RecoveryConfig::Init::zero_filled: c["init"] = "zero_filled"; break;
    case RecoveryConfig::Init::random: c["init"] = "random"; break;
    case RecoveryConfig::Init::provided: c["init"] = "provided"; break;
  }
  c["stagnation_tol"] = cfg.stagnation_tol;
  c["adaptive_scaling"] = cfg.adaptive_scaling;
  c["seed"] = cfg.seed;
  j["config"] = c;
  return j.dump(2);
}

}  // namespace gcs
