#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcs/generators.hpp"
#include "gcs/rng.hpp"
#include "gcs/signals.hpp"

namespace gcs {

/// Latent sampling distribution on the admissible ball.
struct LatentLaw {
  enum class Kind {
    gaussian_ball,  // standard normal, rejection-resampled into the ball
    uniform_ball,
  };
  Kind kind = Kind::gaussian_ball;
};

Eigen::VectorXd draw_latent(const LatentLaw& law, const LatentBall& ball, Rng& rng);

/// Per-frequency worst-case energy capture of a secant class: for each
/// frequency i, the (estimated or bounded) sup over nonzero class members h
/// of the channel-summed |i-th Fourier coefficient of h|^2 / ||h||^2.
struct ChristoffelEstimate {
  enum class Mode { monte_carlo, exact_subspace, interval };
  Eigen::VectorXd values;  // point values; equals `upper` in interval mode
  long trials = 0;
  Mode mode = Mode::monte_carlo;
  Eigen::VectorXd lower;  // populated unless mode == monte_carlo
  Eigen::VectorXd upper;
};

/// Frequency sampling distribution. kappa records the mass of the source
/// estimate before any flooring.
struct SamplingLaw {
  Eigen::VectorXd probs;
  double min_prob = 0.0;
  bool floor_applied = false;
  double kappa = 0.0;
};

/// Worst-frequency mismatch between a secant-class estimate and a sampling
/// law: value = max_i K(i)/probs(i).
struct CompatibilityReport {
  double value = 0.0;
  Eigen::Index argmax_index = 0;
  Eigen::MatrixXd table;  // optional grid, rows = sampling prompt, cols = recovery prompt
  std::vector<ConditionId> row_ids;
  std::vector<ConditionId> col_ids;
};

/// Trial-wise max of |i-th coefficient of G(z1,c1)-G(z2,c2)|^2/||h||^2 over
/// random latent pairs; zero-difference trials are skipped. Deterministic in
/// seed; trial t draws from the child stream derive(t), so estimates are
/// monotone in trials for a fixed seed.
ChristoffelEstimate christoffel_monte_carlo(const GeneratorSpec& G, const ConditionId& c1,
                                            const ConditionId& c2, const LatentLaw& latent_law,
                                            long trials, std::uint64_t seed);

struct ExactSubspaceOptions {
  long lower_trials = 20000;
  std::uint64_t seed = 0;
};

/// Interval enclosure from cone structure. upper(i) maximizes the complex
/// Rayleigh quotient over the span of each cone-pair's column spaces; lower(i)
/// is a Monte Carlo refinement over cone-feasible latents. When both inputs
/// are single unconstrained pieces the class is a subspace, upper is attained,
/// and the result is marked exact_subspace with lower == upper.
ChristoffelEstimate christoffel_exact_subspace(const ConeDecomposition& decomp1,
                                               const ConeDecomposition& decomp2,
                                               const ExactSubspaceOptions& options = {});

/// probs(i) proportional to max(K(i), floor * max_j K(j)). floor > 0 restores
/// full support; floor = 0 is allowed only when K is strictly positive.
SamplingLaw sampling_law(const ChristoffelEstimate& K, double floor = 1e-12);

/// (max_i |i-th coefficient block of g|^2 / probs(i))^(1/2).
double sampling_seminorm(const Signal& g, const SamplingLaw& law);

/// Ties in the max broken toward the lowest frequency index.
CompatibilityReport compatibility_factor(const ChristoffelEstimate& K12, const SamplingLaw& law3);

void to_csv(const ChristoffelEstimate& estimate, std::ostream& out);
void to_csv(const SamplingLaw& law, std::ostream& out);
std::string to_json(const ChristoffelEstimate& estimate);
std::string to_json(const SamplingLaw& law);

}  // namespace gcs
