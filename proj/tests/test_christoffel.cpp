#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "gcs/christoffel.hpp"
#include "gcs/errors.hpp"
#include "gcs/generators.hpp"
#include "gcs/rng.hpp"
#include "gcs/signals.hpp"

using namespace gcs;

namespace {

LinearClassSpec single_vector_class(const Eigen::VectorXd& b, double radius = 3.0) {
  LinearClassSpec spec;
  spec.channels = 1;
  spec.per_channel_len = b.size();
  spec.ball = {1, radius};
  spec.bases["c"] = b;
  return spec;
}

// Columns are even-symmetric cosine mixtures, so every Fourier coefficient is
// real and the subspace bound is attainable by real class members.
LinearClassSpec even_lowpass_class(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd raw(n, 2);
  for (Eigen::Index col = 0; col < 2; ++col)
    for (Eigen::Index t = 0; t < n; ++t) {
      double v = 0.0;
      for (int f = 0; f <= 3; ++f) {
        Rng coef = rng.derive(100 * col + f);
        v += coef.normal() * std::exp(-0.7 * f) *
             std::cos(2.0 * std::numbers::pi * f * double(t) / double(n));
      }
      raw(t, col) = v;
    }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  LinearClassSpec spec;
  spec.channels = 1;
  spec.per_channel_len = n;
  spec.ball = {2, 3.0};
  spec.bases["c"] = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
  return spec;
}

// Independent maximization of the complex Rayleigh quotient on a 2-D class:
// 1e4-point angle grid with the cross-term phase solved in closed form.
double grid_oracle_upper(const Eigen::MatrixXd& B, int channels, Eigen::Index n,
                         Eigen::Index freq) {
  Eigen::MatrixXcd M(channels, 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    Signal s = zero_signal(channels, n);
    s.data = B.col(j).cast<std::complex<double>>();
    Spectrum sp = dft(s);
    for (int ch = 0; ch < channels; ++ch) M(ch, j) = sp.coeffs(ch * n + freq);
  }
  const Eigen::Matrix2cd H = M.adjoint() * M;
  const double h11 = H(0, 0).real(), h22 = H(1, 1).real(), h12 = std::abs(H(0, 1));
  double best = 0.0;
  for (int t = 0; t <= 10000; ++t) {
    const double theta = 0.5 * std::numbers::pi * double(t) / 10000.0;
    const double c = std::cos(theta), s = std::sin(theta);
    best = std::max(best, h11 * c * c + h22 * s * s + 2.0 * c * s * h12);
  }
  return best;
}

}  // namespace

TEST_CASE("single-vector class is learned exactly from one secant") {
  Rng rng(1);
  Eigen::VectorXd b(8);
  for (int i = 0; i < 8; ++i) b(i) = rng.normal();
  GeneratorSpec G = single_vector_class(b);
  ChristoffelEstimate est =
      christoffel_monte_carlo(G, "c", "c", LatentLaw{}, 5, 42);
  Signal sb = zero_signal(1, 8);
  sb.data = b.cast<std::complex<double>>();
  Spectrum sp = dft(sb);
  const double bb = b.squaredNorm();
  for (Eigen::Index i = 0; i < 8; ++i)
    CHECK(est.values(i) == doctest::Approx(block_energy(sp, i) / bb).epsilon(1e-12));
}

TEST_CASE("constant generator raises a degeneracy error") {
  ReluGeneratorSpec dead;
  dead.widths = {2, 2, 4};
  dead.channels = 1;
  dead.per_channel_len = 4;
  dead.ball = {2, 1.0};
  dead.weights["c"] = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Ones(4, 2)};
  CHECK_THROWS_AS(
      christoffel_monte_carlo(GeneratorSpec(dead), "c", "c", LatentLaw{}, 10, 3),
      DegenerateClassError);
}

TEST_CASE("flat and full-space subspace values") {
  // span{e1}: the delta has a flat spectrum, K(i) = 1/n.
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(8);
  e1(0) = 1.0;
  LinearClassSpec spec = single_vector_class(e1);
  ConeDecomposition d = enumerate_cones(spec, "c");
  ChristoffelEstimate est = christoffel_exact_subspace(d, d);
  CHECK(est.mode == ChristoffelEstimate::Mode::exact_subspace);
  for (Eigen::Index i = 0; i < 8; ++i) {
    CHECK(est.values(i) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
    CHECK(est.lower(i) == est.upper(i));
  }

  // Full space: every unit functional is fully captured, kappa = n.
  LinearClassSpec full;
  full.channels = 1;
  full.per_channel_len = 6;
  full.ball = {6, 2.0};
  full.bases["c"] = Eigen::MatrixXd::Identity(6, 6);
  ConeDecomposition df = enumerate_cones(full, "c");
  ChristoffelEstimate ef = christoffel_exact_subspace(df, df);
  for (Eigen::Index i = 0; i < 6; ++i)
    CHECK(ef.values(i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ef.values.sum() == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("two-dimensional class matches the angular grid oracle") {
  for (std::uint64_t seed : {5u, 6u}) {
    LinearClassSpec spec = even_lowpass_class(8, seed);
    ConeDecomposition d = enumerate_cones(spec, "c");
    ChristoffelEstimate est = christoffel_exact_subspace(d, d);
    for (Eigen::Index i = 0; i < 8; ++i) {
      const double oracle = grid_oracle_upper(spec.bases["c"], 1, 8, i);
      CHECK(std::abs(est.upper(i) - oracle) < 1e-6);
    }
  }
  // Two channels as well.
  LinearClassSpec two = tightness_linear_family(2, 2, 8, 1.0, 2.0, {{"c", 0.1}}, 8);
  ConeDecomposition d2 = enumerate_cones(two, "c");
  ChristoffelEstimate est2 = christoffel_exact_subspace(d2, d2);
  for (Eigen::Index i = 0; i < 8; ++i) {
    const double oracle = grid_oracle_upper(two.bases["c"], 2, 8, i);
    CHECK(std::abs(est2.upper(i) - oracle) < 1e-6);
  }
}

TEST_CASE("sampled estimates stay below the subspace bound") {
  ReluGeneratorSpec relu = tightness_relu_family({2, 3}, 1, 8, 3.0, {{"a", 0.3}}, 11);
  GeneratorSpec G = relu;
  ChristoffelEstimate mc = christoffel_monte_carlo(G, "a", "a", LatentLaw{}, 2000, 7);
  ConeDecomposition d = enumerate_cones(relu, "a");
  ChristoffelEstimate iv = christoffel_exact_subspace(d, d);
  CHECK(iv.mode == ChristoffelEstimate::Mode::interval);
  for (Eigen::Index i = 0; i < 8; ++i) {
    CHECK(mc.values(i) <= iv.upper(i) * (1.0 + 1e-10));
    CHECK(iv.lower(i) <= iv.upper(i) * (1.0 + 1e-10));
  }

  // On a single-piece class the sampled max approaches the bound where it is
  // attainable; the bound's argmax is such a frequency for an even class.
  LinearClassSpec even = even_lowpass_class(16, 21);
  ConeDecomposition de = enumerate_cones(even, "c");
  ChristoffelEstimate exact = christoffel_exact_subspace(de, de);
  Eigen::Index argmax = 0;
  exact.values.maxCoeff(&argmax);
  ChristoffelEstimate sampled =
      christoffel_monte_carlo(GeneratorSpec(even), "c", "c", LatentLaw{}, 100000, 9);
  CHECK(sampled.values(argmax) >= 0.95 * exact.values(argmax));
  CHECK(sampled.values(argmax) <= exact.values(argmax) * (1.0 + 1e-10));
}

TEST_CASE("estimates are deterministic and monotone in trials") {
  GeneratorSpec G = tightness_relu_family({2, 3}, 1, 6, 3.0, {{"a", 0.2}}, 13);
  ChristoffelEstimate a = christoffel_monte_carlo(G, "a", "a", LatentLaw{}, 50, 77);
  ChristoffelEstimate b = christoffel_monte_carlo(G, "a", "a", LatentLaw{}, 50, 77);
  CHECK((a.values - b.values).norm() == 0.0);
  ChristoffelEstimate c = christoffel_monte_carlo(G, "a", "a", LatentLaw{}, 100, 77);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(a.values(i) <= c.values(i));
}

TEST_CASE("sampling law construction") {
  ChristoffelEstimate flat;
  flat.values = Eigen::VectorXd::Constant(4, 0.5);
  SamplingLaw uniform = sampling_law(flat);
  for (int i = 0; i < 4; ++i) CHECK(uniform.probs(i) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(uniform.min_prob == doctest::Approx(0.25));
  CHECK(uniform.kappa == doctest::Approx(2.0));
  CHECK_FALSE(uniform.floor_applied);

  ChristoffelEstimate spiky;
  spiky.values = Eigen::VectorXd::Zero(4);
  spiky.values(0) = 1.0;
  SamplingLaw floored = sampling_law(spiky, 1e-12);
  CHECK(floored.floor_applied);
  CHECK(floored.probs.minCoeff() > 0.0);
  CHECK(floored.probs(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(floored.probs.sum() == doctest::Approx(1.0).epsilon(1e-12));

  ChristoffelEstimate zero;
  zero.values = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(sampling_law(zero), DegenerateClassError);
  CHECK_THROWS_AS(sampling_law(spiky, 0.0), DegenerateClassError);
  CHECK_NOTHROW(sampling_law(flat, 0.0));
  CHECK_THROWS_AS(sampling_law(flat, -0.1), InvalidInputError);
}

TEST_CASE("seminorm equals brute force and is dominated by the norm") {
  Rng rng(31);
  Signal g = zero_signal(2, 8);
  for (Eigen::Index i = 0; i < g.data.size(); ++i)
    g.data(i) = {rng.normal(), rng.normal()};

  ChristoffelEstimate flat;
  flat.values = Eigen::VectorXd::Constant(8, 1.0);
  SamplingLaw uniform = sampling_law(flat);
  Spectrum sp = dft(g);
  double max_energy = 0.0;
  for (Eigen::Index i = 0; i < 8; ++i) max_energy = std::max(max_energy, block_energy(sp, i));
  CHECK(sampling_seminorm(g, uniform) ==
        doctest::Approx(std::sqrt(8.0 * max_energy)).epsilon(1e-12));

  Signal zero = zero_signal(2, 8);
  CHECK(sampling_seminorm(zero, uniform) == 0.0);

  for (int t = 0; t < 20; ++t) {
    ChristoffelEstimate k;
    k.values = Eigen::VectorXd::Zero(8);
    for (int i = 0; i < 8; ++i) k.values(i) = rng.uniform() + 0.05;
    SamplingLaw law = sampling_law(k);
    Signal x = zero_signal(2, 8);
    for (Eigen::Index i = 0; i < x.data.size(); ++i)
      x.data(i) = {rng.normal(), rng.normal()};
    // Brute-force re-evaluation through per-frequency blocks.
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 8; ++i)
      worst = std::max(worst, sample_coefficient(x, i).squaredNorm() / law.probs(i));
    const double semi = sampling_seminorm(x, law);
    CHECK(semi == doctest::Approx(std::sqrt(worst)).epsilon(1e-10));
    CHECK(semi <= x.data.norm() / std::sqrt(law.min_prob) * (1.0 + 1e-12));
  }
}

TEST_CASE("compatibility factor basics") {
  ChristoffelEstimate K;
  K.values = Eigen::VectorXd::Constant(4, 0.3);
  SamplingLaw uniform = sampling_law(K);
  CompatibilityReport rep = compatibility_factor(K, uniform);
  CHECK(rep.value == doctest::Approx(K.values.sum()).epsilon(1e-12));
  CHECK(rep.argmax_index == 0);  // exact ties resolve to the lowest index

  Rng rng(41);
  for (int t = 0; t < 25; ++t) {
    ChristoffelEstimate k;
    k.values = Eigen::VectorXd::Zero(6);
    for (int i = 0; i < 6; ++i) k.values(i) = rng.uniform() + 0.02;
    SamplingLaw own = sampling_law(k, 0.0);
    // Matched law: the ratio collapses to the pre-floor mass.
    CHECK(compatibility_factor(k, own).value ==
          doctest::Approx(k.values.sum()).epsilon(1e-12));
    // Any other full-support law can only do worse.
    ChristoffelEstimate other;
    other.values = Eigen::VectorXd::Zero(6);
    for (int i = 0; i < 6; ++i) other.values(i) = rng.uniform() + 0.02;
    SamplingLaw mismatched = sampling_law(other, 0.0);
    CHECK(compatibility_factor(k, mismatched).value >=
          k.values.sum() * (1.0 - 1e-12));
  }
}

TEST_CASE("prompt grid diagonal is the column minimum") {
  GeneratorSpec fam = tightness_linear_family(
      2, 1, 16, 3.0, 2.0, {{"p0", 0.0}, {"p1", 0.3}, {"p2", 0.8}}, 99);
  const std::vector<ConditionId> ids = {"p0", "p1", "p2"};
  std::vector<ChristoffelEstimate> Ks;
  std::vector<SamplingLaw> laws;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    Ks.push_back(christoffel_monte_carlo(fam, ids[r], ids[r], LatentLaw{}, 3000, 200 + r));
    laws.push_back(sampling_law(Ks.back()));
  }
  Eigen::MatrixXd grid(3, 3);
  for (int s = 0; s < 3; ++s)
    for (int r = 0; r < 3; ++r) grid(s, r) = compatibility_factor(Ks[r], laws[s]).value;
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s)
      CHECK(grid(r, r) <= grid(s, r) * (1.0 + 1e-9));
}

TEST_CASE("estimates are invariant under class scaling") {
  LinearClassSpec spec = even_lowpass_class(8, 51);
  LinearClassSpec scaled = spec;
  scaled.bases["c"] *= 3.0;
  ChristoffelEstimate a = christoffel_exact_subspace(enumerate_cones(spec, "c"),
                                                     enumerate_cones(spec, "c"));
  ChristoffelEstimate b = christoffel_exact_subspace(enumerate_cones(scaled, "c"),
                                                     enumerate_cones(scaled, "c"));
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);

  ChristoffelEstimate ma =
      christoffel_monte_carlo(GeneratorSpec(spec), "c", "c", LatentLaw{}, 100, 5);
  ChristoffelEstimate mb =
      christoffel_monte_carlo(GeneratorSpec(scaled), "c", "c", LatentLaw{}, 100, 5);
  CHECK((ma.values - mb.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("serialization") {
  ChristoffelEstimate k;
  k.values = Eigen::VectorXd::LinSpaced(4, 0.1, 0.4);
  SamplingLaw law = sampling_law(k);
  std::stringstream csv;
  to_csv(law, csv);
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  CHECK(line == "index,prob");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);
  CHECK(to_json(law).find("\"kappa\"") != std::string::npos);
  CHECK(to_json(k).find("monte_carlo") != std::string::npos);

  std::stringstream est_csv;
  to_csv(k, est_csv);
  std::getline(est_csv, line);
  CHECK(line == "index,value");
}
