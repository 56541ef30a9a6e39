#include "gcs/verification.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <ostream>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {

void format_double(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

Eigen::MatrixXd orth_basis(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return Eigen::MatrixXd(M.rows(), 0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

// Real-stacked action of the plan on each (real) basis column.
Eigen::MatrixXd stacked_action(const MeasurementPlan& plan, const Eigen::MatrixXd& basis,
                               int channels) {
  const Eigen::Index total = static_cast<Eigen::Index>(channels) * plan.m;
  Eigen::MatrixXd S(2 * total, basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Signal col = make_signal(basis.col(j).cast<std::complex<double>>(), channels);
    Eigen::VectorXcd aj = apply(plan, col).y;
    S.col(j).head(total) = aj.real();
    S.col(j).tail(total) = aj.imag();
  }
  return S;
}

// Secant of the piecewise class: map_a z1 - map_b z2 for ball-uniform draws.
bool draw_secant(const ConeDecomposition& decomp, Rng& rng, Eigen::VectorXd& out) {
  LatentLaw uniform{LatentLaw::Kind::uniform_ball};
  Eigen::VectorXd z1 = draw_latent(uniform, decomp.ball, rng);
  Eigen::VectorXd z2 = draw_latent(uniform, decomp.ball, rng);
  Eigen::Index a = find_piece(decomp, z1);
  Eigen::Index b = find_piece(decomp, z2);
  if (a < 0 || b < 0) return false;
  out = decomp.pieces[static_cast<std::size_t>(a)].map * z1 -
        decomp.pieces[static_cast<std::size_t>(b)].map * z2;
  return out.squaredNorm() > 0.0;
}

bool draw_generator_secant(const GeneratorSpec& G, const ConditionId& c, const LatentLaw& law,
                           Rng& rng, Eigen::VectorXd& out) {
  const LatentBall ball = latent_ball(G);
  Eigen::VectorXd z1 = draw_latent(law, ball, rng);
  Eigen::VectorXd z2 = draw_latent(law, ball, rng);
  out = generate(G, z1, c).data.real() - generate(G, z2, c).data.real();
  return out.squaredNorm() > 0.0;
}

}  // namespace

NondegeneracyReport check_nondegeneracy(const ConeDecomposition& decomp_r,
                                        const MeasurementPlan& plan, double tau,
                                        NondegeneracyReport::Method method, long probes,
                                        std::uint64_t seed) {
  validate(plan);
  if (plan.mode != MeasurementPlan::Mode::weighted)
    throw ModeConflictError("check_nondegeneracy: distortion is defined for weighted plans");
  if (decomp_r.pieces.empty())
    throw InvalidInputError("check_nondegeneracy: empty cone decomposition");
  if (decomp_r.channels != plan.channels || decomp_r.per_channel_len != plan.per_channel_len)
    throw InvalidInputError("check_nondegeneracy: class shape differs from plan");
  if (!(tau > 0.0)) throw InvalidInputError("check_nondegeneracy: tau must be positive");

  NondegeneracyReport report;
  report.method = method;
  report.requested_tau = tau;
  report.min_sq = std::numeric_limits<double>::infinity();
  report.max_sq = 0.0;

  if (method == NondegeneracyReport::Method::exact_spectral) {
    const std::size_t P = decomp_r.pieces.size();
    for (std::size_t a = 0; a < P; ++a) {
      for (std::size_t b = a; b < P; ++b) {
        Eigen::MatrixXd joint(decomp_r.pieces[a].map.rows(),
                              decomp_r.pieces[a].map.cols() + decomp_r.pieces[b].map.cols());
        joint << decomp_r.pieces[a].map, decomp_r.pieces[b].map;
        Eigen::MatrixXd Q = orth_basis(joint);
        if (Q.cols() == 0) continue;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked_action(plan, Q, plan.channels));
        double smin = svd.singularValues().minCoeff();
        double smax = svd.singularValues().maxCoeff();
        double lo = smin * smin, hi = smax * smax;
        report.pair_extremes.emplace_back(static_cast<Eigen::Index>(a),
                                          static_cast<Eigen::Index>(b), lo, hi);
        double dev = std::max(1.0 - lo, hi - 1.0);
        if (dev > std::max(1.0 - report.min_sq, report.max_sq - 1.0)) {
          report.worst_pair_a = static_cast<Eigen::Index>(a);
          report.worst_pair_b = static_cast<Eigen::Index>(b);
        }
        report.min_sq = std::min(report.min_sq, lo);
        report.max_sq = std::max(report.max_sq, hi);
      }
    }
  } else {
    if (probes <= 0) throw InvalidInputError("check_nondegeneracy: probes must be positive");
    Rng rng(seed);
    long used = 0;
    Eigen::VectorXd h;
    for (long i = 0; i < probes; ++i) {
      if (!draw_secant(decomp_r, rng, h)) continue;
      Signal s = make_signal(h.cast<std::complex<double>>(), plan.channels);
      double q = apply(plan, s).y.squaredNorm() / h.squaredNorm();
      report.min_sq = std::min(report.min_sq, q);
      report.max_sq = std::max(report.max_sq, q);
      ++used;
    }
    if (used == 0) throw DegenerateClassError("check_nondegeneracy: no nonzero secants sampled");
    report.probes = used;
  }

  report.tau_hat = std::max(0.0, std::max(1.0 - report.min_sq, report.max_sq - 1.0));
  report.pass = report.tau_hat <= tau;
  return report;
}

SrecReport check_srec(const NondegeneracyReport& report) {
  if (report.tau_hat >= 1.0)
    throw NoCertificateError("check_srec: distortion at or above one certifies nothing");
  SrecReport out;
  out.tau_hat = report.tau_hat;
  out.gamma = std::sqrt(1.0 - report.tau_hat);
  out.q = 0.0;
  out.witness_pair_a = report.worst_pair_a;
  out.witness_pair_b = report.worst_pair_b;
  return out;
}

namespace {

void check_common_ranges(double tau, double delta, double mu_min, double lambda,
                         double constant) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidInputError("complexity: tau must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInputError("complexity: delta must lie in (0,1)");
  if (!(mu_min > 0.0 && mu_min <= 1.0))
    throw InvalidInputError("complexity: mu_min must lie in (0,1]");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidInputError("complexity: lambda must be positive");
  if (!(constant > 0.0)) throw InvalidInputError("complexity: constant must be positive");
}

long budget_from(double constant, double tau, double lambda, double bracket) {
  double m = constant * lambda * bracket / (tau * tau);
  if (!std::isfinite(m)) throw InvalidInputError("complexity: non-finite budget");
  return std::max<long>(1, static_cast<long>(std::ceil(m)));
}

}  // namespace

ComplexityBudget complexity_relu(Eigen::Index k, int d, const std::vector<Eigen::Index>& widths,
                                 double tau, double delta, double mu_min, double lambda,
                                 double constant) {
  check_common_ranges(tau, delta, mu_min, lambda, constant);
  if (k < 1) throw InvalidInputError("complexity_relu: k must be at least 1");
  if (d < 2) throw InvalidInputError("complexity_relu: depth must be at least 2");
  if (widths.size() != static_cast<std::size_t>(d - 1))
    throw InvalidInputError("complexity_relu: expected d-1 hidden widths");
  double log_kbar = 0.0;
  for (Eigen::Index w : widths) {
    if (w < k) throw InvalidInputError("complexity_relu: widths must be expansive (>= k)");
    log_kbar += std::log(static_cast<double>(w));
  }
  log_kbar /= static_cast<double>(d - 1);

  double piece_cone = static_cast<double>(k) * (d - 1) *
                      (1.0 + log_kbar - std::log(static_cast<double>(k)));
  double piece_scale =
      static_cast<double>(k) * (1.0 + std::log(1.0 / (tau * std::sqrt(mu_min))));
  double bracket = piece_cone + piece_scale + std::log(1.0 / delta);

  ComplexityBudget out;
  out.regime = ComplexityBudget::Regime::relu;
  out.inputs = {{"k", static_cast<double>(k)},     {"d", static_cast<double>(d)},
                {"kbar", std::exp(log_kbar)},      {"tau", tau},
                {"delta", delta},                  {"mu_min", mu_min},
                {"lambda", lambda}};
  out.constant = constant;
  out.bracket = bracket;
  out.m_required = budget_from(constant, tau, lambda, bracket);
  return out;
}

ComplexityBudget complexity_lipschitz(Eigen::Index k, double L, double R, double xi, double tau,
                                      double delta, double mu_min, double lambda,
                                      double constant) {
  check_common_ranges(tau, delta, mu_min, lambda, constant);
  if (k < 1) throw InvalidInputError("complexity_lipschitz: k must be at least 1");
  if (!(L > 0.0) || !(R > 0.0) || !(xi > 0.0))
    throw InvalidInputError("complexity_lipschitz: L, R, xi must be positive");

  double bracket = static_cast<double>(k) * std::log1p(L * R / (xi * tau * std::sqrt(mu_min))) +
                   std::log(1.0 / delta);
  ComplexityBudget out;
  out.regime = ComplexityBudget::Regime::lipschitz;
  out.inputs = {{"k", static_cast<double>(k)}, {"L", L},         {"R", R},
                {"xi", xi},                    {"tau", tau},     {"delta", delta},
                {"mu_min", mu_min},            {"lambda", lambda}};
  out.constant = constant;
  out.bracket = bracket;
  out.q_slack = std::sqrt(1.0 - tau) * xi;
  out.m_required = budget_from(constant, tau, lambda, bracket);
  return out;
}

ComplexityBudget complexity_piecewise(double N, Eigen::Index k, double tau, double delta,
                                      double mu_min, double lambda, double constant) {
  check_common_ranges(tau, delta, mu_min, lambda, constant);
  if (k < 1) throw InvalidInputError("complexity_piecewise: k must be at least 1");
  if (!(N >= 1.0)) throw InvalidInputError("complexity_piecewise: N must be at least 1");

  double bracket = std::log(N) +
                   static_cast<double>(k) * std::log1p(1.0 / (tau * std::sqrt(mu_min))) +
                   std::log(1.0 / delta);
  ComplexityBudget out;
  out.regime = ComplexityBudget::Regime::piecewise_linear;
  out.inputs = {{"N", N},     {"k", static_cast<double>(k)}, {"tau", tau},
                {"delta", delta}, {"mu_min", mu_min},        {"lambda", lambda}};
  out.constant = constant;
  out.bracket = bracket;
  out.m_required = budget_from(constant, tau, lambda, bracket);
  return out;
}

ComplexityBudget complexity_net_based(double net_size, double tau, double delta, double lambda,
                                      double constant) {
  check_common_ranges(tau, delta, 1.0, lambda, constant);
  if (!(net_size >= 1.0))
    throw InvalidInputError("complexity_net_based: net size must be at least 1");
  double bracket = std::log(2.0 * net_size / delta);
  ComplexityBudget out;
  out.regime = ComplexityBudget::Regime::net_based;
  out.inputs = {{"net_size", net_size}, {"tau", tau}, {"delta", delta}, {"lambda", lambda}};
  out.constant = constant;
  out.bracket = bracket;
  out.m_required = budget_from(constant, tau, lambda, bracket);
  return out;
}

namespace {

struct SpectrumCache {
  std::vector<Eigen::VectorXcd> coeffs;  // per net point, channel-major dft

  void add(const Eigen::VectorXd& point, int channels) {
    coeffs.push_back(dft(make_signal(point.cast<std::complex<double>>(), channels)).coeffs);
  }
};

// Squared seminorm distance with early exit once the bound is exceeded.
bool within_eta(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const SamplingLaw& law,
                int channels, double eta_sq) {
  const Eigen::Index n = law.probs.size();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double e = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
      Eigen::Index idx = static_cast<Eigen::Index>(ch) * n + i;
      e += std::norm(a(idx) - b(idx));
    }
    worst = std::max(worst, e / law.probs(i));
    if (worst > eta_sq) return false;
  }
  return true;
}

}  // namespace

SecantNet build_secant_net(const GeneratorSpec& G, const ConditionId& c, double eta,
                           const SamplingLaw& law, const SecantNetOptions& options) {
  if (!(eta > 0.0)) throw InvalidInputError("build_secant_net: eta must be positive");
  if (law.probs.size() != signal_len(G))
    throw InvalidInputError("build_secant_net: law length differs from signal length");
  if (!(law.probs.minCoeff() > 0.0))
    throw InvalidInputError("build_secant_net: law must have full support");
  if (options.pool <= 0 || options.probes <= 0 || options.rounds <= 0)
    throw InvalidInputError("build_secant_net: budgets must be positive");

  SecantNet net;
  net.channels = channel_count(G);
  net.per_channel_len = signal_len(G);
  net.eta = eta;
  net.law = law;
  net.seed = options.seed;

  SpectrumCache cache;
  const double eta_sq = eta * eta;
  Rng root(options.seed);

  auto covered = [&](const Eigen::VectorXcd& spec) {
    for (const Eigen::VectorXcd& p : cache.coeffs)
      if (within_eta(spec, p, law, net.channels, eta_sq)) return true;
    return false;
  };
  auto consider = [&](Rng& rng) -> int {  // -1 skip, 0 covered, 1 added
    Eigen::VectorXd h;
    if (!draw_generator_secant(G, c, options.latent, rng, h)) return -1;
    h /= h.norm();
    Eigen::VectorXcd spec = dft(make_signal(h.cast<std::complex<double>>(), net.channels)).coeffs;
    if (covered(spec)) return 0;
    if (net.points.size() >= options.max_size) return 2;
    net.points.push_back(h);
    cache.coeffs.push_back(std::move(spec));
    return 1;
  };

  Rng pool_rng = root.derive(0);
  bool overflow = false;
  for (long i = 0; i < options.pool && !overflow; ++i) overflow = consider(pool_rng) == 2;

  net.status = SecantNet::Status::coverage_unverified;
  for (int round = 1; round <= options.rounds && !overflow; ++round) {
    Rng probe_rng = root.derive(static_cast<std::uint64_t>(round));
    long additions = 0;
    for (long i = 0; i < options.probes; ++i) {
      int r = consider(probe_rng);
      if (r == 1) ++additions;
      if (r == 2) {
        overflow = true;
        break;
      }
    }
    net.probes_used += options.probes;
    if (!overflow && additions == 0) {
      net.status = SecantNet::Status::certified;
      break;
    }
  }
  return net;
}

NetExtensionReport net_extension_check(const SecantNet& net, const GeneratorSpec& G,
                                       const ConditionId& c, const MeasurementPlan& plan,
                                       double eps, long probes, std::uint64_t seed) {
  validate(plan);
  if (plan.mode != MeasurementPlan::Mode::weighted)
    throw ModeConflictError("net_extension_check: the bound is stated for weighted plans");
  if (!(eps > 0.0 && eps < 1.0))
    throw InvalidInputError("net_extension_check: eps must lie in (0,1)");
  if (net.points.empty()) throw InvalidInputError("net_extension_check: empty net");
  if (net.channels != plan.channels || net.per_channel_len != plan.per_channel_len)
    throw InvalidInputError("net_extension_check: net shape differs from plan");

  NetExtensionReport report;
  report.eps = eps;
  report.eta = net.eta;
  report.probes = probes;

  double net_violation = 0.0;
  for (const Eigen::VectorXd& p : net.points) {
    Signal s = make_signal(p.cast<std::complex<double>>(), net.channels);
    double v = apply(plan, s).y.squaredNorm();
    net_violation = std::max(net_violation, std::abs(v - 1.0) - eps);
  }
  if (net_violation > 1e-12) {
    report.status = NetExtensionReport::Status::prerequisite_failed;
    report.worst_slack = net_violation;
    return report;
  }

  const double lo = std::max(0.0, std::sqrt(1.0 - eps) - net.eta);
  const double hi = std::sqrt(1.0 + eps) + net.eta;
  double worst = -std::numeric_limits<double>::infinity();
  Rng rng(seed);
  Eigen::VectorXd h;
  for (long i = 0; i < probes; ++i) {
    LatentLaw latent;
    if (!draw_generator_secant(G, c, latent, rng, h)) continue;
    h /= h.norm();
    double v = apply(plan, make_signal(h.cast<std::complex<double>>(), net.channels)).y.norm();
    worst = std::max(worst, std::max(lo - v, v - hi));
  }
  report.worst_slack = worst;
  report.status = worst > 1e-12 ? NetExtensionReport::Status::violated
                                : NetExtensionReport::Status::holds;
  return report;
}

ConcentrationTable concentration_experiment(const GeneratorSpec& G, const ConditionId& c,
                                            const SamplingLaw& law, ConcentrationTarget h_mode,
                                            const std::vector<Eigen::Index>& m_grid, double eps,
                                            long trials, std::uint64_t seed) {
  if (m_grid.empty()) throw InvalidInputError("concentration_experiment: empty m grid");
  if (trials <= 0) throw InvalidInputError("concentration_experiment: trials must be positive");
  if (!(eps > 0.0)) throw InvalidInputError("concentration_experiment: eps must be positive");

  const int C = channel_count(G);
  const Eigen::Index n = signal_len(G);
  if (law.probs.size() != n)
    throw InvalidInputError("concentration_experiment: law length differs from signal length");

  Rng root(seed);
  Signal h;
  if (h_mode == ConcentrationTarget::impulse) {
    Eigen::VectorXcd data = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(C) * n);
    data(0) = 1.0;  // flat spectrum across every frequency
    h = make_signal(data, C);
  } else {
    Rng rng = root.derive(0);
    Eigen::VectorXd diff;
    int attempts = 0;
    while (!draw_generator_secant(G, c, LatentLaw{}, rng, diff)) {
      if (++attempts > 1000)
        throw DegenerateClassError("concentration_experiment: no nonzero secants");
    }
    h = make_signal(diff.cast<std::complex<double>>(), C);
  }
  const double h2 = h.data.squaredNorm();

  ConcentrationTable table;
  table.h_norm_sq = h2;
  table.monotone_trend = true;
  table.unbiased = true;
  for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
    Rng seeder = root.derive(100 + mi);
    long bad = 0;
    double sum = 0.0, sumsq = 0.0;
    for (long t = 0; t < trials; ++t) {
      MeasurementPlan plan =
          draw_plan(law, m_grid[mi], MeasurementPlan::DrawMode::iid_with_replacement,
                    MeasurementPlan::Mode::weighted, C, seeder.next_u64());
      double v = apply(plan, h).y.squaredNorm();
      if (std::abs(v - h2) > eps * h2) ++bad;
      double ratio = v / h2;
      sum += ratio;
      sumsq += ratio * ratio;
    }
    ConcentrationRow row;
    row.m = m_grid[mi];
    row.eps = eps;
    row.failure_rate = static_cast<double>(bad) / static_cast<double>(trials);
    row.trials = trials;
    row.mean_ratio = sum / static_cast<double>(trials);
    table.rows.push_back(row);

    double var = std::max(0.0, sumsq / static_cast<double>(trials) -
                                   row.mean_ratio * row.mean_ratio);
    double se = std::sqrt(var / static_cast<double>(trials));
    if (std::abs(row.mean_ratio - 1.0) > 3.0 * se + 1e-12) table.unbiased = false;
    if (mi > 0 && row.failure_rate > table.rows[mi - 1].failure_rate + 1e-15)
      table.monotone_trend = false;
  }
  return table;
}

double nondegeneracy_pass_rate(const ConeDecomposition& decomp, const SamplingLaw& law,
                               Eigen::Index m, double tau, int draws, std::uint64_t seed) {
  if (draws <= 0) throw InvalidInputError("nondegeneracy_pass_rate: draws must be positive");
  Rng seeder(seed);
  int good = 0;
  for (int i = 0; i < draws; ++i) {
    MeasurementPlan plan = draw_plan(law, m, MeasurementPlan::DrawMode::iid_with_replacement,
                                     MeasurementPlan::Mode::weighted, decomp.channels,
                                     seeder.next_u64());
    if (check_nondegeneracy(decomp, plan, tau).pass) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(draws);
}

CalibrationResult calibrate_nondegeneracy(const ConeDecomposition& decomp, const SamplingLaw& law,
                                          Eigen::Index m_at_constant_one, double tau, double delta,
                                          int draws, std::uint64_t seed, int max_doublings) {
  if (m_at_constant_one < 1)
    throw InvalidInputError("calibrate_nondegeneracy: base budget must be at least 1");
  CalibrationResult result;
  double constant = 1.0;
  for (int i = 0; i <= max_doublings; ++i) {
    Eigen::Index m = static_cast<Eigen::Index>(
        std::ceil(constant * static_cast<double>(m_at_constant_one)));
    double rate = nondegeneracy_pass_rate(decomp, law, m, tau, draws, seed + i);
    result.constant = constant;
    result.m = m;
    result.rate = rate;
    if (rate >= 1.0 - delta) {
      result.achieved = true;
      return result;
    }
    constant *= 2.0;
  }
  result.achieved = false;
  return result;
}

std::string to_json(const NondegeneracyReport& report) {
  nlohmann::json j;
  j["tau_hat"] = report.tau_hat;
  j["method"] = report.method == NondegeneracyReport::Method::exact_spectral ? "exact_spectral"
                                                                             : "sampled";
  j["min_sq"] = report.min_sq;
  j["max_sq"] = report.max_sq;
  j["worst_pair"] = {report.worst_pair_a, report.worst_pair_b};
  j["pairs_checked"] = report.pair_extremes.size();
  j["probes"] = report.probes;
  j["pass"] = report.pass;
  j["requested_tau"] = report.requested_tau;
  // Subspace relaxation: certified over spans, so cone-restricted distortion
  // can only be smaller.
  j["certificate"] = "subspace_relaxation";
  return j.dump(2);
}

std::string to_json(const SrecReport& report) {
  nlohmann::json j;
  j["gamma"] = report.gamma;
  j["q"] = report.q;
  j["tau_hat"] = report.tau_hat;
  j["witness_pair"] = {report.witness_pair_a, report.witness_pair_b};
  return j.dump(2);
}

std::string to_json(const ComplexityBudget& budget) {
  nlohmann::json j;
  switch (budget.regime) {
    case ComplexityBudget::Regime::relu: j["regime"] = "relu"; break;
    case ComplexityBudget::Regime::lipschitz: j["regime"] = "lipschitz"; break;
    case ComplexityBudget::Regime::piecewise_linear: j["regime"] = "piecewise_linear"; break;
    case ComplexityBudget::Regime::net_based: j["regime"] = "net_based"; break;
  }
  j["inputs"] = budget.inputs;
  j["constant"] = budget.constant;
  j["bracket"] = budget.bracket;
  j["q_slack"] = budget.q_slack;
  j["m_required"] = budget.m_required;
  return j.dump(2);
}

std::string to_json(const NetExtensionReport& report) {
  nlohmann::json j;
  switch (report.status) {
    case NetExtensionReport::Status::holds: j["status"] = "holds"; break;
    case NetExtensionReport::Status::prerequisite_failed: j["status"] = "prerequisite_failed"; break;
    case NetExtensionReport::Status::violated: j["status"] = "violated"; break;
  }
  j["worst_slack"] = report.worst_slack;
  j["eps"] = report.eps;
  j["eta"] = report.eta;
  j["probes"] = report.probes;
  return j.dump(2);
}

void to_csv(const ConcentrationTable& table, std::ostream& out) {
  std::string text = "m,eps,failure_rate,trials\n";
  for (const ConcentrationRow& row : table.rows) {
    text += std::to_string(row.m);
    text += ',';
    format_double(text, row.eps);
    text += ',';
    format_double(text, row.failure_rate);
    text += ',';
    text += std::to_string(row.trials);
    text += '\n';
  }
  out << text;
}

}  // namespace gcs
