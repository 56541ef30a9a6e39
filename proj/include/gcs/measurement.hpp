#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcs/christoffel.hpp"
#include "gcs/signals.hpp"

namespace gcs {

/// Frequencies to measure and how to scale them. Weighted plans pair with
/// iid draws; unweighted plans pair with distinct draws that always include
/// DC. y entries are channel-major: (draw j, channel ch) at ch*m + j.
struct MeasurementPlan {
  enum class Mode { weighted, unweighted };
  enum class DrawMode { iid_with_replacement, without_replacement_dc };

  std::vector<Eigen::Index> indices;
  Eigen::VectorXd weights;  // 1/prob(I_j) in weighted mode, all 1 otherwise
  Mode mode = Mode::weighted;
  DrawMode draw_mode = DrawMode::iid_with_replacement;
  Eigen::Index m = 0;
  int channels = 1;
  Eigen::Index per_channel_len = 0;
  std::uint64_t seed = 0;
};

void validate(const MeasurementPlan& plan);

struct Measurements {
  Eigen::VectorXcd y;  // length channels * m, channel-major
  double noise_norm = 0.0;
  Eigen::VectorXcd noise;             // e, empty when noiseless
  Eigen::VectorXcd unweighted_noise;  // u
};

/// Draws measurement frequencies from a sampling law. Weighted mode requires
/// iid draws; unweighted requires without_replacement_dc (index 0 first, the
/// rest sequentially renormalized); cross pairings raise ModeConflictError.
MeasurementPlan draw_plan(const SamplingLaw& law, Eigen::Index m,
                          MeasurementPlan::DrawMode draw_mode, MeasurementPlan::Mode mode,
                          int channels, std::uint64_t seed);

/// y_(j,ch) = (1/sqrt(m)) * weights(j)^(1/2) * (i-th Fourier coefficient of
/// channel ch at frequency I_j).
Measurements apply(const MeasurementPlan& plan, const Signal& f);

/// Exact Hermitian adjoint of apply.
Signal adjoint(const MeasurementPlan& plan, const Measurements& meas);

/// Adds e = (1/sqrt(m)) W^(1/2) u (weighted) or e = (1/sqrt(m)) u; the
/// realized noise and its norm are recorded on the result.
Measurements add_noise(const MeasurementPlan& plan, const Measurements& meas,
                       const Eigen::VectorXcd& u, bool weighted);

/// Same, with u drawn complex Gaussian with per-entry standard deviation
/// `scale`.
Measurements add_noise(const MeasurementPlan& plan, const Measurements& meas, double scale,
                       bool weighted, std::uint64_t seed);

/// (m/n) * adjoint(plan, y): the standard zero-filled reconstruction.
Signal zero_filled(const MeasurementPlan& plan, const Measurements& meas);

std::string to_json(const MeasurementPlan& plan);
MeasurementPlan plan_from_json(const std::string& text);

void to_csv(const Measurements& meas, int channels, std::ostream& out);
Measurements measurements_from_csv(std::istream& in, int* channels_out = nullptr);

}  // namespace gcs
