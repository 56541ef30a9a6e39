#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gcs/christoffel.hpp"
#include "gcs/generators.hpp"
#include "gcs/measurement.hpp"
#include "gcs/recovery.hpp"
#include "gcs/signals.hpp"

namespace gcs {

/// Declarative description of an experiment sweep. Parsed from JSON; the
/// canonical echo (embedded generator, all defaults resolved) is what gets
/// hashed and written next to the results.
struct ExperimentConfig {
  enum class Kind { lambda_grid, reconstruction };
  enum class Scenario { in_range_matched, in_range_mismatched, out_of_range };
  enum class LawMode { matched, uniform };

  Kind kind = Kind::reconstruction;
  GeneratorSpec generator;
  std::vector<ConditionId> prompts;
  std::vector<double> ratios;  // m/n per cell, in (0,1]
  int trials = 5;
  MeasurementPlan::DrawMode draw_mode = MeasurementPlan::DrawMode::without_replacement_dc;
  MeasurementPlan::Mode mode = MeasurementPlan::Mode::unweighted;
  LawMode law = LawMode::matched;
  RecoveryConfig recovery;
  long christoffel_trials = 2000;
  std::uint64_t seed = 0;
  Scenario scenario = Scenario::in_range_matched;
  ConditionId target_prompt;              // fixed source prompt for mismatched runs
  Eigen::VectorXcd out_of_range_target;   // channel-major data, out_of_range runs
  double noise_scale = 0.0;
  double law_floor = 1e-12;
  int workers = 1;
};

void validate(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

/// Resolves the generator-source keys of a config object: exactly one of
/// "generator" (inline spec), "generator_file" (path), or "family"
/// (tightness-family constructor). Shared by every config schema.
GeneratorSpec generator_from_config_json(const std::string& text);
std::string to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);  // fnv-1a of the canonical echo

struct ResultRow {
  std::string scenario;
  ConditionId c_s;
  ConditionId c_r;
  double ratio = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double psnr_db = 0.0;
  double rel_error = 0.0;
  double residual = 0.0;
  int steps = 0;
  double wall_time = 0.0;  // seconds; written to the timings sidecar only
  std::string method;      // recovery | zero_filled | diverged
  double peak = 0.0;       // psnr reference peak, max |f*| entry
  std::string config_hash;
};

struct SummaryRow {
  std::string scenario;
  ConditionId c_s;
  ConditionId c_r;
  double ratio = 0.0;
  std::string method;
  int trials = 0;
  double mean_psnr_db = 0.0;  // over rows with finite psnr
  double se_psnr_db = 0.0;
  double ci95_psnr_db = 0.0;
  double mean_rel_error = 0.0;
  double se_rel_error = 0.0;
  double ci95_rel_error = 0.0;
  int n_exact = 0;  // rows with zero error (infinite psnr)
};

/// Compatibility grid: entry (row c_s, column c_r) compares the recovery
/// prompt's secant energy against the sampling prompt's law.
struct LambdaGrid {
  std::vector<ConditionId> prompts;
  Eigen::MatrixXd lambda;  // NaN where either prompt is degenerate
  std::vector<char> degenerate;
  std::map<ConditionId, ChristoffelEstimate> estimates;
  std::map<ConditionId, SamplingLaw> laws;
};

LambdaGrid run_lambda_grid(const ExperimentConfig& config);
std::vector<ResultRow> run_reconstruction_grid(const ExperimentConfig& config);
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void rows_to_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void timings_to_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void summary_to_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void lambda_to_csv(const LambdaGrid& grid, std::ostream& out);

/// Column readers for the emitted per-prompt files; exact round-trips.
Eigen::VectorXd law_probs_from_csv(std::istream& in);
Eigen::VectorXd christoffel_values_from_csv(std::istream& in);

/// Executes the configured run and writes
/// <out_parent>/run-<hash>/{config.json, laws/*.csv, lambda.csv | rows.csv,
/// timings.csv, summary.csv}. Returns the run directory.
std::string run_experiment_to_dir(const ExperimentConfig& config, const std::string& out_parent);

}  // namespace gcs
