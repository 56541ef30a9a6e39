#include "gcs/christoffel.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>

#include "gcs/errors.hpp"

namespace gcs {

Eigen::VectorXd draw_latent(const LatentLaw& law, const LatentBall& ball, Rng& rng) {
  if (ball.dim < 1 || !(ball.radius > 0.0))
    throw InvalidInputError("draw_latent: ball must have positive dimension and radius");
  Eigen::VectorXd z(ball.dim);
  if (law.kind == LatentLaw::Kind::uniform_ball) {
    double nrm = 0.0;
    do {
      for (Eigen::Index i = 0; i < ball.dim; ++i) z(i) = rng.normal();
      nrm = z.norm();
    } while (nrm == 0.0);
    return z * (ball.radius * std::pow(rng.uniform(), 1.0 / double(ball.dim)) / nrm);
  }
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (Eigen::Index i = 0; i < ball.dim; ++i) z(i) = rng.normal();
    if (z.norm() <= ball.radius) return z;
  }
  throw InvalidInputError("draw_latent: rejection sampling failed; radius too small");
}

ChristoffelEstimate christoffel_monte_carlo(const GeneratorSpec& G, const ConditionId& c1,
                                            const ConditionId& c2, const LatentLaw& latent_law,
                                            long trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidInputError("christoffel_monte_carlo: trials must be >= 1");
  if (!has_condition(G, c1)) throw UnknownConditionError("unknown condition: " + c1);
  if (!has_condition(G, c2)) throw UnknownConditionError("unknown condition: " + c2);
  const LatentBall ball = latent_ball(G);
  const Eigen::Index n = signal_len(G);
  const int channels = channel_count(G);

  Eigen::VectorXd K = Eigen::VectorXd::Zero(n);
  Rng root(seed);
  long nondegenerate = 0;
  Signal h = zero_signal(channels, n);
  for (long t = 0; t < trials; ++t) {
    Rng trial_rng = root.derive(static_cast<std::uint64_t>(t));
    const Eigen::VectorXd z1 = draw_latent(latent_law, ball, trial_rng);
    const Eigen::VectorXd z2 = draw_latent(latent_law, ball, trial_rng);
    h.data = generate(G, z1, c1).data - generate(G, z2, c2).data;
    const double energy = h.data.squaredNorm();
    if (energy == 0.0) continue;
    ++nondegenerate;
    const Spectrum sp = dft(h);
    for (Eigen::Index i = 0; i < n; ++i)
      K(i) = std::max(K(i), block_energy(sp, i) / energy);
  }
  if (nondegenerate == 0)
    throw DegenerateClassError("christoffel_monte_carlo: every sampled difference was zero");
  ChristoffelEstimate est;
  est.values = std::move(K);
  est.trials = trials;
  est.mode = ChristoffelEstimate::Mode::monte_carlo;
  return est;
}

namespace {

// Orthonormal basis (thin, rank-revealing) of the union of two column spaces.
Eigen::MatrixXd union_basis(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd concat(A.rows(), A.cols() + B.cols());
  concat << A, B;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(concat, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

// Channel-blocked Fourier coefficients of every basis column.
Eigen::MatrixXcd basis_spectrum(const Eigen::MatrixXd& Q, int channels, Eigen::Index n) {
  Eigen::MatrixXcd out(Q.rows(), Q.cols());
  Signal s = zero_signal(channels, n);
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    s.data = Q.col(j).cast<std::complex<double>>();
    out.col(j) = dft(s).coeffs;
  }
  return out;
}

double top_eigenvalue(const Eigen::MatrixXcd& H) {
  if (H.rows() == 1) return H(0, 0).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

ChristoffelEstimate christoffel_exact_subspace(const ConeDecomposition& decomp1,
                                               const ConeDecomposition& decomp2,
                                               const ExactSubspaceOptions& options) {
  if (decomp1.pieces.empty() || decomp2.pieces.empty())
    throw InvalidInputError("christoffel_exact_subspace: empty decomposition");
  if (decomp1.channels != decomp2.channels || decomp1.per_channel_len != decomp2.per_channel_len)
    throw InvalidInputError("christoffel_exact_subspace: ambient shape mismatch");
  const int channels = decomp1.channels;
  const Eigen::Index n = decomp1.per_channel_len;
  if (n < 1) throw InvalidInputError("christoffel_exact_subspace: missing ambient shape");

  Eigen::VectorXd upper = Eigen::VectorXd::Zero(n);
  for (const auto& pa : decomp1.pieces) {
    for (const auto& pb : decomp2.pieces) {
      const Eigen::MatrixXd Q = union_basis(pa.map, pb.map);
      if (Q.cols() == 0) continue;
      const Eigen::MatrixXcd Qhat = basis_spectrum(Q, channels, n);
      Eigen::MatrixXcd M(channels, Q.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int ch = 0; ch < channels; ++ch) M.row(ch) = Qhat.row(ch * n + i);
        upper(i) = std::max(upper(i), top_eigenvalue(M * M.adjoint()));
      }
    }
  }

  ChristoffelEstimate est;
  est.upper = upper;
  est.values = upper;

  const bool subspace = decomp1.count() == 1 && decomp1.pieces[0].preactivations.empty() &&
                        decomp2.count() == 1 && decomp2.pieces[0].preactivations.empty();
  if (subspace) {
    est.lower = upper;
    est.mode = ChristoffelEstimate::Mode::exact_subspace;
    return est;
  }

  // Cone-feasible refinement: sample latents in each ball, evaluate through
  // the piece that contains them.
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
  Rng rng(options.seed);
  const LatentLaw uniform{LatentLaw::Kind::uniform_ball};
  Signal h = zero_signal(channels, n);
  long used = 0;
  for (long t = 0; t < options.lower_trials; ++t) {
    Rng trial_rng = rng.derive(static_cast<std::uint64_t>(t));
    const Eigen::VectorXd z1 = draw_latent(uniform, decomp1.ball, trial_rng);
    const Eigen::VectorXd z2 = draw_latent(uniform, decomp2.ball, trial_rng);
    const Eigen::Index j1 = find_piece(decomp1, z1);
    const Eigen::Index j2 = find_piece(decomp2, z2);
    if (j1 < 0 || j2 < 0) continue;
    h.data = (decomp1.pieces[j1].map * z1 - decomp2.pieces[j2].map * z2)
                 .cast<std::complex<double>>();
    const double energy = h.data.squaredNorm();
    if (energy == 0.0) continue;
    ++used;
    const Spectrum sp = dft(h);
    for (Eigen::Index i = 0; i < n; ++i)
      lower(i) = std::max(lower(i), block_energy(sp, i) / energy);
  }
  est.lower = lower;
  est.trials = used;
  est.mode = ChristoffelEstimate::Mode::interval;
  return est;
}

SamplingLaw sampling_law(const ChristoffelEstimate& K, double floor) {
  if (K.values.size() < 1) throw InvalidInputError("sampling_law: empty estimate");
  if (!K.values.allFinite() || K.values.minCoeff() < 0.0)
    throw InvalidInputError("sampling_law: estimate entries must be finite and nonnegative");
  if (floor < 0.0 || floor >= 1.0)
    throw InvalidInputError("sampling_law: floor must lie in [0, 1)");
  const double max_k = K.values.maxCoeff();
  if (!(max_k > 0.0)) throw DegenerateClassError("sampling_law: all-zero estimate");

  SamplingLaw law;
  law.kappa = K.values.sum();
  Eigen::VectorXd floored = K.values.cwiseMax(floor * max_k);
  law.floor_applied = (floored - K.values).maxCoeff() > 0.0;
  if (floored.minCoeff() <= 0.0)
    throw DegenerateClassError("sampling_law: zero support requires a positive floor");
  law.probs = floored / floored.sum();
  law.min_prob = law.probs.minCoeff();
  return law;
}

double sampling_seminorm(const Signal& g, const SamplingLaw& law) {
  validate(g);
  if (law.probs.size() != g.per_channel_len)
    throw InvalidInputError("sampling_seminorm: law length does not match signal");
  if (!(law.probs.minCoeff() > 0.0))
    throw InvalidInputError("sampling_seminorm: law must have full support");
  const Spectrum sp = dft(g);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.per_channel_len; ++i)
    worst = std::max(worst, block_energy(sp, i) / law.probs(i));
  return std::sqrt(worst);
}

CompatibilityReport compatibility_factor(const ChristoffelEstimate& K12,
                                         const SamplingLaw& law3) {
  if (K12.values.size() != law3.probs.size())
    throw InvalidInputError("compatibility_factor: estimate and law length mismatch");
  if (!(law3.probs.minCoeff() > 0.0))
    throw InvalidInputError("compatibility_factor: law must have full support");
  CompatibilityReport report;
  report.value = -1.0;
  for (Eigen::Index i = 0; i < K12.values.size(); ++i) {
    const double ratio = K12.values(i) / law3.probs(i);
    if (ratio > report.value) {
      report.value = ratio;
      report.argmax_index = i;
    }
  }
  return report;
}

namespace {

const char* mode_name(ChristoffelEstimate::Mode mode) {
  switch (mode) {
    case ChristoffelEstimate::Mode::monte_carlo: return "monte_carlo";
    case ChristoffelEstimate::Mode::exact_subspace: return "exact_subspace";
    case ChristoffelEstimate::Mode::interval: return "interval";
  }
  return "unknown";
}

}  // namespace

void to_csv(const ChristoffelEstimate& estimate, std::ostream& out) {
  const bool with_bounds = estimate.lower.size() == estimate.values.size() &&
                           estimate.upper.size() == estimate.values.size();
  out << (with_bounds ? "index,value,lower,upper\n" : "index,value\n");
  char buf[160];
  for (Eigen::Index i = 0; i < estimate.values.size(); ++i) {
    if (with_bounds)
      std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(i),
                    estimate.values(i), estimate.lower(i), estimate.upper(i));
    else
      std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(i),
                    estimate.values(i));
    out << buf;
  }
}

void to_csv(const SamplingLaw& law, std::ostream& out) {
  out << "index,prob\n";
  char buf[80];
  for (Eigen::Index i = 0; i < law.probs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(i), law.probs(i));
    out << buf;
  }
}

std::string to_json(const ChristoffelEstimate& estimate) {
  nlohmann::json j;
  j["mode"] = mode_name(estimate.mode);
  j["trials"] = estimate.trials;
  j["values"] = std::vector<double>(estimate.values.begin(), estimate.values.end());
  if (estimate.lower.size() > 0)
    j["lower"] = std::vector<double>(estimate.lower.begin(), estimate.lower.end());
  if (estimate.upper.size() > 0)
    j["upper"] = std::vector<double>(estimate.upper.begin(), estimate.upper.end());
  return j.dump();
}

std::string to_json(const SamplingLaw& law) {
  nlohmann::json j;
  j["probs"] = std::vector<double>(law.probs.begin(), law.probs.end());
  j["min_prob"] = law.min_prob;
  j["floor_applied"] = law.floor_applied;
  j["kappa"] = law.kappa;
  return j.dump();
}

}  // namespace gcs
