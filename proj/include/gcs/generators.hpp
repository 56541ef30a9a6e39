#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "gcs/signals.hpp"

namespace gcs {

/// Opaque conditioning label, compared by equality.
using ConditionId = std::string;

/// Admissible latent domain: the closed Euclidean ball of the given radius.
struct LatentBall {
  Eigen::Index dim = 0;
  double radius = 0.0;
};

/// Bias-free feedforward ReLU generator whose weights depend on the
/// condition. widths = (k_0, ..., k_d) with k_0 <= k_l for every hidden
/// layer and k_d = channels * per_channel_len. weights[c] holds W_1..W_d,
/// W_l of shape widths[l] x widths[l-1].
struct ReluGeneratorSpec {
  std::vector<Eigen::Index> widths;
  int channels = 1;
  Eigen::Index per_channel_len = 0;
  LatentBall ball;
  std::map<ConditionId, std::vector<Eigen::MatrixXd>> weights;
};

/// One linear piece per condition: G(z,c) = B_c z with columns of B_c
/// linearly independent.
struct LinearClassSpec {
  int channels = 1;
  Eigen::Index per_channel_len = 0;
  LatentBall ball;
  std::map<ConditionId, Eigen::MatrixXd> bases;
};

using GeneratorSpec = std::variant<ReluGeneratorSpec, LinearClassSpec>;

void validate(const ReluGeneratorSpec& spec);
void validate(const LinearClassSpec& spec);
void validate(const GeneratorSpec& spec);

Eigen::Index latent_dim(const GeneratorSpec& spec);
Eigen::Index ambient_dim(const GeneratorSpec& spec);
int channel_count(const GeneratorSpec& spec);
Eigen::Index signal_len(const GeneratorSpec& spec);
double ball_radius(const GeneratorSpec& spec);
LatentBall latent_ball(const GeneratorSpec& spec);
std::vector<ConditionId> condition_ids(const GeneratorSpec& spec);
bool has_condition(const GeneratorSpec& spec, const ConditionId& c);

/// Forward pass. Throws UnknownConditionError for an unlisted condition and
/// OutOfBallError when ||z|| exceeds the ball radius (1e-12 relative slack).
Signal generate(const ReluGeneratorSpec& spec, const Eigen::VectorXd& z, const ConditionId& c);
Signal generate(const LinearClassSpec& spec, const Eigen::VectorXd& z, const ConditionId& c);
Signal generate(const GeneratorSpec& spec, const Eigen::VectorXd& z, const ConditionId& c);

/// Reverse-mode transpose-Jacobian product J(z)^T cotangent, with zero
/// subgradient on units whose pre-activation is exactly zero.
Eigen::VectorXd generate_gradient(const ReluGeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent);
Eigen::VectorXd generate_gradient(const LinearClassSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent);
Eigen::VectorXd generate_gradient(const GeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c, const Eigen::VectorXd& cotangent);

/// Full Jacobian of G(.,c) at z, shape (channels*per_channel_len) x k.
Eigen::MatrixXd generate_jacobian(const GeneratorSpec& spec, const Eigen::VectorXd& z,
                                  const ConditionId& c);

/// Active/inactive bits per hidden layer (bit set iff pre-activation > 0).
std::vector<std::uint32_t> activation_pattern(const ReluGeneratorSpec& spec,
                                              const Eigen::VectorXd& z, const ConditionId& c);

/// One linear piece of the generator: on the cone cut out by the sign
/// constraints, G(z,c) = map * z exactly.
struct ConePiece {
  std::vector<std::uint32_t> pattern;           // active bits per hidden layer
  Eigen::MatrixXd map;                          // ambient x k
  std::vector<Eigen::MatrixXd> preactivations;  // M_l, rows constrained in sign by pattern
  Eigen::VectorXd witness;                      // strict interior point inside the ball
};

struct ConeDecomposition {
  std::vector<ConePiece> pieces;
  int possibly_infeasible = 0;  // patterns dropped after the witness budget ran out
  int channels = 1;
  Eigen::Index per_channel_len = 0;
  LatentBall ball;
  std::size_t count() const { return pieces.size(); }
};

struct ConeEnumerationOptions {
  int unit_cap = 20;      // max total hidden units
  int restarts = 200;     // witness search budget per pattern
  int presamples = 512;   // latents probed for realized patterns
  int pocs_sweeps = 60;   // projection sweeps per restart
  std::uint64_t seed = 0;
};

/// All realizable activation patterns with certified witnesses.
/// Throws CapacityError above unit_cap.
ConeDecomposition enumerate_cones(const ReluGeneratorSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options = {});
ConeDecomposition enumerate_cones(const LinearClassSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options = {});
ConeDecomposition enumerate_cones(const GeneratorSpec& spec, const ConditionId& c,
                                  const ConeEnumerationOptions& options = {});

/// Index of the first piece whose closed cone contains z, or -1.
Eigen::Index find_piece(const ConeDecomposition& decomp, const Eigen::VectorXd& z,
                        double tol = 1e-10);

/// k(d-1) log(2e kbar / k) with kbar the geometric mean of hidden widths;
/// upper bound on log(piece count).
double log_cone_count_bound(const ReluGeneratorSpec& spec);

/// Product of layer spectral norms (||B_c||_2 for linear classes); certified
/// Lipschitz upper bound on the ball.
double lipschitz_bound(const ReluGeneratorSpec& spec, const ConditionId& c);
double lipschitz_bound(const LinearClassSpec& spec, const ConditionId& c);
double lipschitz_bound(const GeneratorSpec& spec, const ConditionId& c);

/// Family of conditions sharing base weights up to per-condition random
/// perturbations of relative scale theta; theta = 0 reproduces the base
/// class exactly.
ReluGeneratorSpec tightness_relu_family(const std::vector<Eigen::Index>& hidden_widths,
                                        int channels, Eigen::Index per_channel_len, double radius,
                                        const std::vector<std::pair<ConditionId, double>>& thetas,
                                        std::uint64_t seed);

/// Linear family whose basis columns are filtered through a low-frequency
/// spectral envelope exp(-min(i, n-i)/envelope_decay); per-condition
/// perturbations live inside the same envelope. Columns are orthonormalized.
LinearClassSpec tightness_linear_family(Eigen::Index k, int channels,
                                        Eigen::Index per_channel_len, double radius,
                                        double envelope_decay,
                                        const std::vector<std::pair<ConditionId, double>>& thetas,
                                        std::uint64_t seed);

std::string generator_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_from_json(const std::string& text);

}  // namespace gcs
