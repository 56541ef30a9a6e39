#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gcs/christoffel.hpp"
#include "gcs/generators.hpp"
#include "gcs/measurement.hpp"
#include "gcs/signals.hpp"

namespace gcs {

struct RecoveryConfig {
  enum class LrSchedule { constant, cosine };
  enum class Init { zero_filled, random, provided };

  int max_steps = 500;
  double base_lr = 1e-2;
  LrSchedule lr_schedule = LrSchedule::cosine;
  double grad_clip = 1.0;
  int patience = 35;  // stagnant steps before early stop
  int restarts = 4;
  Init init = Init::zero_filled;
  double stagnation_tol = 1e-6;  // relative residual improvement counting as progress
  bool adaptive_scaling = false;  // per-coordinate gradient scaling variant
  Eigen::VectorXd provided_init;  // first-restart start when init == provided
  std::uint64_t seed = 0;
};

void validate(const RecoveryConfig& cfg);

struct RecoveryResult {
  Eigen::VectorXd z_hat;
  Signal f_hat;
  double residual = 0.0;   // (1/(2 C m)) ||A G(z_hat) - y||^2
  double omega_gap = 0.0;  // spread of per-restart residuals (worst - best)
  int steps_used = 0;
  int restart_index = 0;
  double max_latent_norm = 0.0;      // largest iterate norm in the winning restart
  std::vector<double> trace;         // objective after each step, winning restart
};

/// Projected gradient descent on (1/(2 C m)) ||A G(z,c_r) - y||^2 over the
/// latent ball, best of `restarts` independent starts (derived seeds).
/// Restart 0 honors cfg.init; later restarts start from uniform ball draws.
RecoveryResult recover(const GeneratorSpec& G, const ConditionId& c_r,
                       const MeasurementPlan& plan, const Measurements& y,
                       const RecoveryConfig& cfg);

/// (1 + 2 sqrt(lambda)/gamma) * approx_error + (2 noise_norm + omega + q)/gamma.
double recovery_bound(double lambda_star, double gamma, double q, double approx_error,
                      double noise_norm, double omega);
double recovery_bound(const CompatibilityReport& lambda_star, double gamma, double q,
                      double approx_error, double noise_norm, double omega);

/// Upper estimate of inf over the class of ||f_star - f||_2: exact
/// ball-constrained projection for linear classes, multi-restart latent
/// descent (budget restarts) otherwise.
double approximation_error(const GeneratorSpec& G, const ConditionId& c_r, const Signal& f_star,
                           int budget = 8);

/// argmin ||B z - target||_2 subject to ||z|| <= radius, solved exactly via
/// the eigendecomposition of B^T B and bisection on the multiplier.
Eigen::VectorXd ball_least_squares(const Eigen::MatrixXd& B, const Eigen::VectorXd& target,
                                   double radius);

std::string to_json(const RecoveryResult& result, const RecoveryConfig& cfg);

}  // namespace gcs
