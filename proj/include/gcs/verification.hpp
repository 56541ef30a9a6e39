#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "gcs/christoffel.hpp"
#include "gcs/generators.hpp"
#include "gcs/measurement.hpp"
#include "gcs/signals.hpp"

namespace gcs {

/// Measured two-sided distortion of a plan on a class: tau_hat bounds
/// | ||A h||^2 / ||h||^2 - 1 | over secants. exact_spectral certifies via the
/// spanned subspace of each cone pair (conservative); sampled probes random
/// secants (a lower estimate).
struct NondegeneracyReport {
  enum class Method { exact_spectral, sampled };
  double tau_hat = 0.0;
  Method method = Method::exact_spectral;
  double min_sq = 0.0;  // worst extremes of ||A h||^2/||h||^2 seen anywhere
  double max_sq = 0.0;
  Eigen::Index worst_pair_a = 0;
  Eigen::Index worst_pair_b = 0;
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double, double>> pair_extremes;
  long probes = 0;
  bool pass = false;
  double requested_tau = 0.0;
};

NondegeneracyReport check_nondegeneracy(const ConeDecomposition& decomp_r,
                                        const MeasurementPlan& plan, double tau,
                                        NondegeneracyReport::Method method =
                                            NondegeneracyReport::Method::exact_spectral,
                                        long probes = 100000, std::uint64_t seed = 0);

/// Restricted lower isometry certificate gamma = sqrt(1 - tau_hat), q = 0.
struct SrecReport {
  double gamma = 0.0;
  double q = 0.0;
  double tau_hat = 0.0;
  Eigen::Index witness_pair_a = 0;  // cone pair attaining the worst distortion
  Eigen::Index witness_pair_b = 0;
};

SrecReport check_srec(const NondegeneracyReport& report);

/// Sample-count budget from one of the sufficiency regimes; the hidden
/// absolute constant is an explicit input (default 1) so each formula is a
/// falsifiable check plus a calibration knob.
struct ComplexityBudget {
  enum class Regime { relu, lipschitz, piecewise_linear, net_based };
  Regime regime = Regime::relu;
  std::map<std::string, double> inputs;
  double constant = 1.0;
  double bracket = 0.0;  // bracketed complexity term before tau^-2 Lambda scaling
  double q_slack = 0.0;  // additive S-REC slack (lipschitz regime)
  long m_required = 1;
};

ComplexityBudget complexity_relu(Eigen::Index k, int d, const std::vector<Eigen::Index>& widths,
                                 double tau, double delta, double mu_min, double lambda,
                                 double constant = 1.0);
ComplexityBudget complexity_lipschitz(Eigen::Index k, double L, double R, double xi, double tau,
                                      double delta, double mu_min, double lambda,
                                      double constant = 1.0);
ComplexityBudget complexity_piecewise(double N, Eigen::Index k, double tau, double delta,
                                      double mu_min, double lambda, double constant = 1.0);
ComplexityBudget complexity_net_based(double net_size, double tau, double delta, double lambda,
                                      double constant = 1.0);

/// Finite set of unit-norm secants built greedily so every sampled normalized
/// secant lies within eta of a net point in the law's seminorm.
struct SecantNet {
  std::vector<Eigen::VectorXd> points;  // channel-major, unit Euclidean norm
  int channels = 1;
  Eigen::Index per_channel_len = 0;
  double eta = 0.0;
  SamplingLaw law;
  enum class Status { certified, coverage_unverified };
  Status status = Status::coverage_unverified;
  long probes_used = 0;
  std::uint64_t seed = 0;
};

struct SecantNetOptions {
  long pool = 4000;        // initial candidate secants
  long probes = 100000;    // certification probes
  std::size_t max_size = 4096;
  int rounds = 3;          // certify-and-extend passes
  std::uint64_t seed = 0;
  LatentLaw latent;
};

SecantNet build_secant_net(const GeneratorSpec& G, const ConditionId& c, double eta,
                           const SamplingLaw& law, const SecantNetOptions& options = {});

/// Checks the two-sided net bound at the given eps, then confirms the
/// extended interval sqrt(1-eps)-eta <= ||A h|| <= sqrt(1+eps)+eta on fresh
/// off-net secants.
struct NetExtensionReport {
  enum class Status { holds, prerequisite_failed, violated };
  Status status = Status::holds;
  double worst_slack = 0.0;  // largest violation of the extended interval
  double eps = 0.0;
  double eta = 0.0;
  long probes = 0;
};

NetExtensionReport net_extension_check(const SecantNet& net, const GeneratorSpec& G,
                                       const ConditionId& c, const MeasurementPlan& plan,
                                       double eps, long probes = 100000, std::uint64_t seed = 0);

/// Fixed-direction concentration: empirical exceedance of
/// | ||A h||^2 - ||h||^2 | > eps ||h||^2 per m over independent weighted
/// plans. `impulse` fixes h to a flat-spectrum delta; `secant` draws one
/// random class secant.
enum class ConcentrationTarget { secant, impulse };

struct ConcentrationRow {
  Eigen::Index m = 0;
  double eps = 0.0;
  double failure_rate = 0.0;
  long trials = 0;
  double mean_ratio = 0.0;  // mean of ||A h||^2 / ||h||^2
};

struct ConcentrationTable {
  std::vector<ConcentrationRow> rows;
  bool monotone_trend = false;  // failure rate nonincreasing along m_grid
  bool unbiased = false;        // every mean within 3 standard errors of 1
  double h_norm_sq = 0.0;
};

ConcentrationTable concentration_experiment(const GeneratorSpec& G, const ConditionId& c,
                                            const SamplingLaw& law, ConcentrationTarget h_mode,
                                            const std::vector<Eigen::Index>& m_grid, double eps,
                                            long trials, std::uint64_t seed);

/// Fraction of independently drawn weighted plans of size m whose
/// exact-spectral distortion stays within tau.
double nondegeneracy_pass_rate(const ConeDecomposition& decomp, const SamplingLaw& law,
                               Eigen::Index m, double tau, int draws, std::uint64_t seed);

/// Doubles the budget constant until the pass rate reaches 1 - delta.
struct CalibrationResult {
  double constant = 1.0;
  Eigen::Index m = 0;
  double rate = 0.0;
  bool achieved = false;
};

CalibrationResult calibrate_nondegeneracy(const ConeDecomposition& decomp, const SamplingLaw& law,
                                          Eigen::Index m_at_constant_one, double tau, double delta,
                                          int draws, std::uint64_t seed, int max_doublings = 8);

std::string to_json(const NondegeneracyReport& report);
std::string to_json(const SrecReport& report);
std::string to_json(const ComplexityBudget& budget);
std::string to_json(const NetExtensionReport& report);
void to_csv(const ConcentrationTable& table, std::ostream& out);

}  // namespace gcs
