// Acceptance gate: one line per criterion, exit code = number of failures.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gcs/christoffel.hpp"
#include "gcs/errors.hpp"
#include "gcs/generators.hpp"
#include "gcs/harness.hpp"
#include "gcs/measurement.hpp"
#include "gcs/recovery.hpp"
#include "gcs/rng.hpp"
#include "gcs/signals.hpp"
#include "gcs/verification.hpp"

using namespace gcs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmtd(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

Signal random_signal(Rng& rng, Eigen::Index n) {
  Eigen::VectorXcd data(n);
  for (Eigen::Index i = 0; i < n; ++i) data(i) = {rng.normal(), rng.normal()};
  return make_signal(std::move(data), 1);
}

Signal signal_difference(const Signal& a, const Signal& b) {
  Signal h = a;
  h.data -= b.data;
  return h;
}

// stacked real action of the measurement operator on real basis columns
Eigen::MatrixXd stacked_measurement_matrix(const MeasurementPlan& plan,
                                           const Eigen::MatrixXd& basis) {
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(plan.channels) * plan.m;
  Eigen::MatrixXd M(rows, basis.cols());
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Signal col = make_signal(basis.col(c).cast<std::complex<double>>(), plan.channels);
    const Eigen::VectorXcd y = apply(plan, col).y;
    M.col(c) << y.real(), y.imag();
  }
  return M;
}

double min_singular_on_subspace(const MeasurementPlan& plan, const Eigen::MatrixXd& basis) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), basis.cols());
  const Eigen::MatrixXd M = stacked_measurement_matrix(plan, Q);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues().minCoeff();
}

// 1. Unitary transform preserves total energy.
Outcome unitarity() {
  Rng rng(101);
  const Eigen::Index sizes[] = {8, 64, 1024};
  double worst = 0.0;
  for (int si = 0; si < 3; ++si) {
    const int count = si == 0 ? 334 : 333;
    for (int t = 0; t < count; ++t) {
      Signal f = random_signal(rng, sizes[si]);
      Spectrum sp = dft(f);
      double total = 0.0;
      for (Eigen::Index i = 0; i < sizes[si]; ++i) total += block_energy(sp, i);
      const double norm2 = f.data.squaredNorm();
      worst = std::max(worst, std::abs(total - norm2) / norm2);
    }
  }
  return {worst < 1e-10, "worst relative energy deviation " + fmtd(worst) +
                             " over 1000 signals, n in {8,64,1024} (tol 1e-10)"};
}

// 2. Self-compatibility under the matched un-floored law equals the mass.
Outcome self_compatibility() {
  const LinearClassSpec spec =
      tightness_linear_family(2, 1, 16, 4.0, 4.0, {{"c", 0.0}}, 7);
  const ConeDecomposition decomp = enumerate_cones(spec, "c");
  const ChristoffelEstimate K = christoffel_exact_subspace(decomp, decomp);
  const SamplingLaw law = sampling_law(K, 1e-300);
  if (law.floor_applied) return {false, "law unexpectedly floored"};
  const double lambda = compatibility_factor(K, law).value;
  const double kappa = K.values.sum();
  const double rel = std::abs(lambda - kappa) / kappa;
  return {rel < 1e-9, "|lambda - kappa|/kappa = " + fmtd(rel) + " (tol 1e-9)"};
}

// 3. Matched sampling prompt minimizes every grid column.
Outcome diagonal_minimality() {
  int violations = 0;
  for (std::uint64_t master = 0; master < 10; ++master) {
    ExperimentConfig cfg;
    cfg.generator = tightness_linear_family(
        2, 1, 16, 4.0, 3.0,
        {{"p0", 0.0}, {"p1", 0.4}, {"p2", 0.8}, {"p3", 1.2}}, master + 1);
    cfg.prompts = {"p0", "p1", "p2", "p3"};
    cfg.ratios = {1.0};
    cfg.christoffel_trials = 500;
    cfg.seed = master * 7919 + 13;
    const LambdaGrid grid = run_lambda_grid(cfg);
    for (Eigen::Index r = 0; r < 4; ++r)
      for (Eigen::Index s = 0; s < 4; ++s)
        if (grid.lambda(r, r) > grid.lambda(s, r) + 1e-12) ++violations;
  }
  return {violations == 0,
          std::to_string(violations) + " column-minimum violations over 10 master seeds"};
}

// 4. Sampling seminorm dominates every realized operator norm.
Outcome seminorm_domination() {
  Rng rng(404);
  const Eigen::Index n = 32;
  int violations = 0;
  double worst_excess = -1.0;
  for (int t = 0; t < 10000; ++t) {
    Eigen::VectorXd probs(n);
    for (Eigen::Index i = 0; i < n; ++i) probs(i) = rng.uniform(0.05, 1.0);
    probs /= probs.sum();
    SamplingLaw law;
    law.probs = probs;
    law.min_prob = probs.minCoeff();
    law.kappa = 1.0;
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.next_u64() % 32);
    const MeasurementPlan plan =
        draw_plan(law, m, MeasurementPlan::DrawMode::iid_with_replacement,
                  MeasurementPlan::Mode::weighted, 1, rng.next_u64());
    const Signal g = random_signal(rng, n);
    const double lhs = std::sqrt(apply(plan, g).y.squaredNorm());
    const double rhs = sampling_seminorm(g, law);
    worst_excess = std::max(worst_excess, lhs - rhs);
    if (lhs > rhs + 1e-12) ++violations;
  }
  return {violations == 0, std::to_string(violations) +
                               " violations in 10000 pairs, worst excess " + fmtd(worst_excess)};
}

// 5. Fixed-direction measurement energies: unbiased, exceedance shrinks with m.
Outcome fixed_secant_concentration() {
  const LinearClassSpec spec =
      tightness_linear_family(2, 1, 32, 4.0, 2.5, {{"c", 0.0}}, 9);
  const GeneratorSpec G = spec;
  const ConeDecomposition decomp = enumerate_cones(spec, "c");
  const SamplingLaw law = sampling_law(christoffel_exact_subspace(decomp, decomp), 1e-12);
  const LatentBall ball = latent_ball(G);

  Rng sec_rng(505);
  const Eigen::Index m_grid[] = {4, 16, 64};
  const long trials = 10000;
  std::string note;
  for (int s = 0; s < 3; ++s) {
    Eigen::VectorXd z1 = draw_latent(LatentLaw{}, ball, sec_rng);
    Eigen::VectorXd z2 = draw_latent(LatentLaw{}, ball, sec_rng);
    const Signal h = signal_difference(generate(G, z1, "c"), generate(G, z2, "c"));
    const double hn2 = h.data.squaredNorm();
    double prev_rate = 1.0;
    for (int mi = 0; mi < 3; ++mi) {
      Rng seeder = Rng(505).derive(100 + 10 * static_cast<std::uint64_t>(s) + mi);
      double sum = 0.0, sumsq = 0.0;
      long fails = 0;
      for (long t = 0; t < trials; ++t) {
        const MeasurementPlan plan =
            draw_plan(law, m_grid[mi], MeasurementPlan::DrawMode::iid_with_replacement,
                      MeasurementPlan::Mode::weighted, 1, seeder.next_u64());
        const double v = apply(plan, h).y.squaredNorm();
        sum += v;
        sumsq += v * v;
        if (std::abs(v - hn2) > 0.5 * hn2) ++fails;
      }
      const double mean = sum / trials;
      const double var = std::max(0.0, (sumsq / trials - mean * mean)) / (trials - 1);
      const double se = std::sqrt(var);
      if (std::abs(mean - hn2) > 3.0 * se + 1e-12)
        return {false, "secant " + std::to_string(s) + " mean off at m=" +
                           std::to_string(m_grid[mi]) + ": |" + fmtd(mean) + " - " + fmtd(hn2) +
                           "| > 3 se"};
      const double rate = static_cast<double>(fails) / trials;
      if (rate > prev_rate + 1e-12)
        return {false, "secant " + std::to_string(s) + " exceedance increased at m=" +
                           std::to_string(m_grid[mi])};
      prev_rate = rate;
      if (s == 0) note += (note.empty() ? "rates " : ", ") + fmtd(rate);
    }
  }
  return {true, "3 secants unbiased within 3 se; " + note + " at m={4,16,64}, eps=0.5"};
}

// 6. Certified two-sided preservation lower-bounds every probed secant.
Outcome srec_zero_violations() {
  Rng root(606);
  long violations = 0;
  int certified = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Eigen::Index k = 1 + inst % 3;
    const Eigen::Index n = 8 + 4 * (inst % 5);
    const LinearClassSpec spec = tightness_linear_family(
        k, 1, n, 3.0, 2.0 + (inst % 4), {{"c", 0.0}}, 1000 + inst);
    const GeneratorSpec G = spec;
    const ConeDecomposition decomp = enumerate_cones(spec, "c");
    const SamplingLaw law = sampling_law(christoffel_exact_subspace(decomp, decomp), 1e-9);

    MeasurementPlan plan;
    double gamma = -1.0;
    for (Eigen::Index m : {2 * k + 2, n, 2 * n, 4 * n}) {
      plan = draw_plan(law, m, MeasurementPlan::DrawMode::iid_with_replacement,
                       MeasurementPlan::Mode::weighted, 1, root.next_u64());
      const NondegeneracyReport report = check_nondegeneracy(decomp, plan, 0.999);
      if (report.tau_hat < 1.0) {
        gamma = check_srec(report).gamma;
        break;
      }
    }
    if (gamma < 0.0) continue;
    ++certified;

    Rng probe = Rng(6060).derive(static_cast<std::uint64_t>(inst));
    const LatentBall ball = latent_ball(G);
    for (int t = 0; t < 10000; ++t) {
      Eigen::VectorXd z1 = draw_latent(LatentLaw{LatentLaw::Kind::uniform_ball}, ball, probe);
      Eigen::VectorXd z2 = draw_latent(LatentLaw{LatentLaw::Kind::uniform_ball}, ball, probe);
      const Signal h = signal_difference(generate(G, z1, "c"), generate(G, z2, "c"));
      const double hn = std::sqrt(h.data.squaredNorm());
      if (hn == 0.0) continue;
      const double lhs = std::sqrt(apply(plan, h).y.squaredNorm());
      if (lhs < gamma * hn - 1e-12) ++violations;
    }
  }
  return {violations == 0 && certified == 50,
          std::to_string(certified) + "/50 instances certified, " + std::to_string(violations) +
              " probe violations in 500000 pairs"};
}

// 7. Budgeted sample size reaches the target pass rate; m scales with tau^-2.
Outcome budget_pass_rate() {
  const LinearClassSpec spec =
      tightness_linear_family(2, 1, 32, 4.0, 2.0, {{"c", 0.0}}, 77);
  const ConeDecomposition decomp = enumerate_cones(spec, "c");
  const ChristoffelEstimate K = christoffel_exact_subspace(decomp, decomp);
  const SamplingLaw law = sampling_law(K, 1e-12);
  const double lambda = compatibility_factor(K, law).value;
  const double delta = 0.1;

  const double taus[] = {0.5, 0.25};
  double cstar = -1.0;
  long ms[2] = {0, 0};
  double rates[2] = {0.0, 0.0};
  for (double c : {1.0, 2.0, 4.0, 8.0}) {
    bool ok = true;
    for (int ti = 0; ti < 2; ++ti) {
      const ComplexityBudget budget = complexity_piecewise(
          static_cast<double>(decomp.count()), 2, taus[ti], delta, law.min_prob, lambda, c);
      ms[ti] = budget.m_required;
      rates[ti] = nondegeneracy_pass_rate(decomp, law, budget.m_required, taus[ti], 200,
                                          7000 + static_cast<std::uint64_t>(c) * 10 + ti);
      if (rates[ti] < 1.0 - delta) {
        ok = false;
        break;
      }
    }
    if (ok) {
      cstar = c;
      break;
    }
  }
  if (cstar < 0.0) return {false, "no constant <= 8 reached pass rate 0.9"};
  const double ratio = static_cast<double>(ms[1]) / static_cast<double>(ms[0]);
  const bool scales = ratio >= 3.0;
  return {cstar <= 10.0 && scales,
          "c*=" + fmtd(cstar) + ", m(tau=0.5)=" + std::to_string(ms[0]) + " rate " +
              fmtd(rates[0]) + ", m(tau=0.25)=" + std::to_string(ms[1]) + " rate " +
              fmtd(rates[1]) + ", ratio " + fmtd(ratio) + " (needs >= 3)"};
}

// 8. Measured mismatched-recovery error never beats the certified bound.
Outcome mismatched_recovery_bound() {
  int done = 0, violations = 0, attempts = 0;
  Rng root(808);
  while (done < 100 && attempts < 140) {
    const int inst = attempts++;
    Rng inst_rng = Rng(808).derive(static_cast<std::uint64_t>(inst));
    const double theta_r = 0.2 + 0.5 * inst_rng.uniform();
    const double theta_s = 0.3 + 0.7 * inst_rng.uniform();
    const LinearClassSpec spec = tightness_linear_family(
        2, 1, 12, 3.0, 3.0, {{"star", 0.0}, {"rec", theta_r}, {"samp", theta_s}},
        2000 + static_cast<std::uint64_t>(inst));
    const GeneratorSpec G = spec;
    const ConeDecomposition d_star = enumerate_cones(spec, "star");
    const ConeDecomposition d_rec = enumerate_cones(spec, "rec");
    const ConeDecomposition d_samp = enumerate_cones(spec, "samp");
    const SamplingLaw law = sampling_law(christoffel_exact_subspace(d_samp, d_samp), 1e-9);
    const double lambda =
        compatibility_factor(christoffel_exact_subspace(d_star, d_rec), law).value;

    Eigen::VectorXd z_star = draw_latent(LatentLaw{}, latent_ball(G), inst_rng);
    const Signal f_star = generate(G, z_star, "star");

    const MeasurementPlan plan =
        draw_plan(law, 10, MeasurementPlan::DrawMode::iid_with_replacement,
                  MeasurementPlan::Mode::weighted, 1, inst_rng.next_u64());
    const Eigen::MatrixXd& basis = spec.bases.at("rec");
    const double gamma = min_singular_on_subspace(plan, basis);
    if (gamma <= 1e-6) continue;

    Measurements meas = apply(plan, f_star);
    meas = add_noise(plan, meas, 0.05, true, inst_rng.next_u64());

    RecoveryConfig rc;
    rc.max_steps = 1500;
    rc.patience = 300;
    rc.base_lr = 0.5;
    rc.lr_schedule = RecoveryConfig::LrSchedule::constant;
    rc.stagnation_tol = 1e-10;
    rc.restarts = 3;
    rc.seed = inst_rng.next_u64();
    const RecoveryResult res = recover(G, "rec", plan, meas, rc);

    const double achieved = std::sqrt(2.0 * plan.channels * static_cast<double>(plan.m) *
                                      res.residual);
    const Eigen::MatrixXd M = stacked_measurement_matrix(plan, basis);
    Eigen::VectorXd target(2 * plan.m);
    target << meas.y.real(), meas.y.imag();
    const Eigen::VectorXd z_opt = ball_least_squares(M, target, ball_radius(G));
    const double inf_misfit = (M * z_opt - target).norm();
    const double omega = std::max(0.0, achieved - inf_misfit);
    const double approx = approximation_error(G, "rec", f_star);
    const double measured = (res.f_hat.data - f_star.data).norm();
    const double bound = recovery_bound(lambda, gamma, 0.0, approx, meas.noise_norm, omega);
    if (measured > bound * (1.0 + 1e-9) + 1e-12) ++violations;
    ++done;
  }
  return {violations == 0 && done == 100,
          std::to_string(done) + " instances evaluated, " + std::to_string(violations) +
              " bound violations"};
}

// 9. Full sampling of an in-class target recovers it to machine-level error.
Outcome full_sampling_exact() {
  const LinearClassSpec spec =
      tightness_linear_family(2, 1, 16, 4.0, 4.0, {{"c", 0.0}}, 31);
  const GeneratorSpec G = spec;
  const Eigen::Index n = 16;
  SamplingLaw uniform;
  uniform.probs = Eigen::VectorXd::Constant(n, 1.0 / n);
  uniform.min_prob = 1.0 / n;
  uniform.kappa = 1.0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Rng rng = Rng(909).derive(static_cast<std::uint64_t>(t));
    Eigen::VectorXd z = draw_latent(LatentLaw{}, latent_ball(G), rng);
    const Signal f_star = generate(G, z, "c");
    const MeasurementPlan plan =
        draw_plan(uniform, n, MeasurementPlan::DrawMode::without_replacement_dc,
                  MeasurementPlan::Mode::unweighted, 1, rng.next_u64());
    RecoveryConfig rc;
    rc.seed = rng.next_u64();
    const RecoveryResult res = recover(G, "c", plan, apply(plan, f_star), rc);
    worst = std::max(worst, relative_error(f_star, res.f_hat));
  }
  return {worst < 1e-6, "worst relative error " + fmtd(worst) + " over 20 trials (tol 1e-6)"};
}

// 10. Every enumerated cone acts linearly and the count obeys the log bound.
Outcome cone_consistency() {
  long cones = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Rng r(10100 + static_cast<std::uint64_t>(inst));
    std::vector<Eigen::Index> widths = {2};
    const int hidden_layers = 1 + static_cast<int>(r.next_u64() % 2);
    for (int l = 0; l < hidden_layers; ++l)
      widths.push_back(2 + static_cast<Eigen::Index>(r.next_u64() % 2));
    const ReluGeneratorSpec spec = tightness_relu_family(
        widths, 1, 8, 3.0, {{"c", 0.0}}, 500 + static_cast<std::uint64_t>(inst));
    const GeneratorSpec G = spec;
    const ConeDecomposition decomp = enumerate_cones(spec, "c");
    if (std::log(static_cast<double>(decomp.count())) >
        log_cone_count_bound(spec) + 1e-12)
      return {false, "cone count exceeds the log bound on instance " + std::to_string(inst)};
    for (std::size_t p = 0; p < decomp.count(); ++p) {
      const ConePiece& piece = decomp.pieces[p];
      for (int w = 0; w < 100; ++w) {
        double scale = 0.05;
        Eigen::VectorXd z;
        Eigen::Index idx = -1;
        for (int shrink = 0; shrink < 60; ++shrink) {
          z = piece.witness;
          for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += scale * r.normal();
          const double zn = z.norm();
          if (zn > spec.ball.radius) z *= 0.999 * spec.ball.radius / zn;
          idx = find_piece(decomp, z);
          if (idx == static_cast<Eigen::Index>(p)) break;
          scale *= 0.5;
        }
        if (idx != static_cast<Eigen::Index>(p))
          return {false, "no in-cone witness found for a piece on instance " +
                             std::to_string(inst)};
        const Signal f = generate(G, z, "c");
        const Eigen::VectorXd lin = piece.map * z;
        const double ref = std::max(1.0, f.data.cwiseAbs().maxCoeff());
        const double err = (lin - f.data.real()).cwiseAbs().maxCoeff() / ref;
        if (err > 1e-12 || f.data.imag().cwiseAbs().maxCoeff() != 0.0)
          return {false, "cone map mismatch " + fmtd(err) + " on instance " +
                             std::to_string(inst)};
      }
      ++cones;
    }
  }
  return {true, std::to_string(cones) + " cones x 100 witnesses matched to 1e-12; counts " +
                    "within the log bound on 20 specs"};
}

// 11. The experiment runner replays byte-identically, any worker count.
Outcome replay_determinism() {
  ExperimentConfig cfg;
  cfg.generator =
      tightness_linear_family(2, 1, 16, 4.0, 4.0, {{"a", 0.0}, {"b", 0.5}}, 7);
  cfg.prompts = {"a", "b"};
  cfg.ratios = {0.5};
  cfg.trials = 2;
  cfg.christoffel_trials = 300;
  cfg.seed = 13;
  const fs::path parent1 = fs::temp_directory_path() / "gcs_acceptance_replay1";
  const fs::path parent2 = fs::temp_directory_path() / "gcs_acceptance_replay2";
  fs::remove_all(parent1);
  fs::remove_all(parent2);
  const std::string dir1 = run_experiment_to_dir(cfg, parent1.string());
  ExperimentConfig threaded = cfg;
  threaded.workers = 4;
  const std::string dir2 = run_experiment_to_dir(threaded, parent2.string());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string rows1 = slurp(fs::path(dir1) / "rows.csv");
  const std::string rows2 = slurp(fs::path(dir2) / "rows.csv");
  return {!rows1.empty() && rows1 == rows2,
          "rows.csv byte-identical across a serial and a 4-worker replay (" +
              std::to_string(rows1.size()) + " bytes)"};
}

// 12. Matched-law sampling beats uniform, direction-only, paired seeds.
Outcome matched_law_benefit() {
  ExperimentConfig base;
  base.generator =
      tightness_linear_family(2, 1, 32, 4.0, 1.5, {{"a", 0.0}, {"b", 0.6}}, 42);
  base.prompts = {"a", "b"};
  base.ratios = {0.1, 0.25};
  base.trials = 3;
  base.christoffel_trials = 400;
  base.noise_scale = 0.05;

  auto mean_error = [](const std::vector<ResultRow>& rows) {
    double total = 0.0;
    int count = 0;
    for (const ResultRow& row : rows)
      if (row.method == "recovery") {
        total += row.rel_error;
        ++count;
      }
    return total / count;
  };

  int wins = 0;
  double matched_sum = 0.0, uniform_sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    ExperimentConfig matched = base;
    matched.seed = 12000 + static_cast<std::uint64_t>(s);
    ExperimentConfig uniform = matched;
    uniform.law = ExperimentConfig::LawMode::uniform;
    const double em = mean_error(run_reconstruction_grid(matched));
    const double eu = mean_error(run_reconstruction_grid(uniform));
    matched_sum += em;
    uniform_sum += eu;
    if (em < eu) ++wins;
  }
  const bool consistent = wins >= (8 * seeds) / 10;
  const bool direction = matched_sum < uniform_sum;
  return {consistent && direction,
          "matched mean " + fmtd(matched_sum / seeds) + " vs uniform " +
              fmtd(uniform_sum / seeds) + ", matched lower in " + std::to_string(wins) + "/" +
              std::to_string(seeds) + " paired seeds (needs >= 16)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"fourier unitarity", unitarity},
      {"matched-law self compatibility equals mass", self_compatibility},
      {"compatibility grid diagonal minimality", diagonal_minimality},
      {"sampling seminorm domination", seminorm_domination},
      {"fixed-secant unbiasedness and concentration", fixed_secant_concentration},
      {"certified contraction holds on probed secants", srec_zero_violations},
      {"budgeted sample size reaches target pass rate", budget_pass_rate},
      {"mismatched recovery error within certified bound", mismatched_recovery_bound},
      {"full-sampling exact recovery", full_sampling_exact},
      {"cone decomposition matches the forward pass", cone_consistency},
      {"experiment replay byte-identical", replay_determinism},
      {"matched sampling law beats uniform", matched_law_benefit},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %02zu %s: %s [%.1fs]\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
