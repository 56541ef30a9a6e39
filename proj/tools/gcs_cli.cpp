#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gcs/errors.hpp"
#include "gcs/harness.hpp"
#include "gcs/rng.hpp"
#include "gcs/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gcs;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("config: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInputError("config: expected a JSON object");
  return j;
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw InvalidInputError("config." + path + ": " + why);
}

std::string require_str(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_string()) fail(key, "expected a string");
  return j.at(key).get<std::string>();
}

double require_num(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_number()) fail(key, "expected a number");
  return j.at(key).get<double>();
}

double num_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail(key, "expected a number");
  return j.at(key).get<double>();
}

long int_or(const json& j, const std::string& key, long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail(key, "expected an integer");
  return j.at(key).get<long>();
}

std::uint64_t u64_or(const json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() && !j.at(key).is_number_unsigned())
    fail(key, "expected an integer seed");
  return j.at(key).get<std::uint64_t>();
}

std::string str_or(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(key, "expected a string");
  return j.at(key).get<std::string>();
}

// Top-level keys are validated strictly, so a misspelled field fails loudly
// instead of silently falling back to a default.
void check_allowed(const json& cfg, const std::vector<std::string>& allowed) {
  for (const auto& item : cfg.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      fail(item.key(), "unknown field");
}

std::vector<std::string> with_bundle_keys(std::initializer_list<std::string> extra) {
  std::vector<std::string> keys = {"generator", "generator_file", "family",
                                   "prompt",    "trials",         "seed",
                                   "floor",     "latent"};
  keys.insert(keys.end(), extra.begin(), extra.end());
  return keys;
}

LatentLaw latent_from(const json& j) {
  const std::string kind = str_or(j, "latent", "gaussian_ball");
  LatentLaw law;
  if (kind == "gaussian_ball")
    law.kind = LatentLaw::Kind::gaussian_ball;
  else if (kind == "uniform_ball")
    law.kind = LatentLaw::Kind::uniform_ball;
  else
    fail("latent", "expected 'gaussian_ball' or 'uniform_ball'");
  return law;
}

struct LawBundle {
  GeneratorSpec generator;
  ConditionId prompt;
  ChristoffelEstimate estimate;
  SamplingLaw law;
  std::uint64_t seed = 0;
};

// Shared front half of the single-prompt subcommands: generator source,
// prompt, Monte Carlo estimate, floored law.
LawBundle law_bundle(const json& cfg, std::uint64_t seed_override, bool has_seed) {
  LawBundle bundle;
  bundle.generator = generator_from_config_json(cfg.dump());
  bundle.prompt = require_str(cfg, "prompt");
  if (!has_condition(bundle.generator, bundle.prompt))
    fail("prompt", "unknown condition '" + bundle.prompt + "'");
  bundle.seed = has_seed ? seed_override : u64_or(cfg, "seed", 0);
  const long trials = int_or(cfg, "trials", 2000);
  bundle.estimate = christoffel_monte_carlo(bundle.generator, bundle.prompt, bundle.prompt,
                                            latent_from(cfg), trials, bundle.seed);
  bundle.law = sampling_law(bundle.estimate, num_or(cfg, "floor", 1e-12));
  return bundle;
}

MeasurementPlan::Mode mode_from(const json& cfg, const char* fallback) {
  const std::string mode = str_or(cfg, "mode", fallback);
  if (mode == "weighted") return MeasurementPlan::Mode::weighted;
  if (mode == "unweighted") return MeasurementPlan::Mode::unweighted;
  fail("mode", "expected 'weighted' or 'unweighted'");
}

MeasurementPlan::DrawMode draw_from(const json& cfg, const char* fallback) {
  const std::string draw = str_or(cfg, "draw_mode", fallback);
  if (draw == "iid_with_replacement") return MeasurementPlan::DrawMode::iid_with_replacement;
  if (draw == "without_replacement_dc") return MeasurementPlan::DrawMode::without_replacement_dc;
  fail("draw_mode", "expected 'iid_with_replacement' or 'without_replacement_dc'");
}

Eigen::Index plan_size(const json& cfg, Eigen::Index n) {
  if (cfg.contains("m")) return static_cast<Eigen::Index>(int_or(cfg, "m", 0));
  const double ratio = require_num(cfg, "ratio");
  if (!(ratio > 0.0) || !(ratio <= 1.0)) fail("ratio", "must be in (0, 1]");
  return std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(ratio * static_cast<double>(n))), 1, n);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write '" + path.string() + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

struct CommonArgs {
  std::string config;
  std::string out = "results";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int workers = 0;
  double constant = 1.0;
  bool has_constant = false;
};

int run_christoffel(const CommonArgs& args) {
  const json cfg = load_config(args.config);
  check_allowed(cfg, with_bundle_keys({}));
  LawBundle bundle = law_bundle(cfg, args.seed, args.has_seed);
  const fs::path csv = fs::path(args.out) / ("christoffel_" + bundle.prompt + ".csv");
  std::stringstream ss;
  to_csv(bundle.estimate, ss);
  write_text(csv, ss.str());
  write_text(fs::path(args.out) / ("christoffel_" + bundle.prompt + ".json"),
             to_json(bundle.estimate));
  std::cout << "christoffel: prompt=" << bundle.prompt << " trials=" << bundle.estimate.trials
            << " kappa=" << bundle.estimate.values.sum() << " -> " << csv.string() << "\n";
  return 0;
}

int run_law(const CommonArgs& args) {
  const json cfg = load_config(args.config);
  check_allowed(cfg, with_bundle_keys({}));
  LawBundle bundle = law_bundle(cfg, args.seed, args.has_seed);
  const fs::path csv = fs::path(args.out) / ("law_" + bundle.prompt + ".csv");
  std::stringstream ss;
  to_csv(bundle.law, ss);
  write_text(csv, ss.str());
  write_text(fs::path(args.out) / ("law_" + bundle.prompt + ".json"), to_json(bundle.law));
  std::cout << "law: prompt=" << bundle.prompt << " min_prob=" << bundle.law.min_prob
            << " floored=" << (bundle.law.floor_applied ? "yes" : "no") << " -> " << csv.string()
            << "\n";
  return 0;
}

ExperimentConfig experiment_from_args(const CommonArgs& args) {
  ExperimentConfig cfg = experiment_config_from_json(read_file(args.config));
  if (args.has_seed) cfg.seed = args.seed;
  if (args.workers > 0) cfg.workers = args.workers;
  return cfg;
}

int run_lambda(const CommonArgs& args) {
  ExperimentConfig cfg = experiment_from_args(args);
  cfg.kind = ExperimentConfig::Kind::lambda_grid;
  const std::string dir = run_experiment_to_dir(cfg, args.out);
  std::cout << "lambda: prompts=" << cfg.prompts.size() << " -> " << dir << "/lambda.csv\n";
  return 0;
}

int run_sample(const CommonArgs& args) {
  const json cfg = load_config(args.config);
  check_allowed(cfg, with_bundle_keys({"m", "ratio", "draw_mode", "mode", "signal_file",
                                       "noise_scale"}));
  LawBundle bundle = law_bundle(cfg, args.seed, args.has_seed);
  const Eigen::Index m = plan_size(cfg, signal_len(bundle.generator));
  MeasurementPlan plan = draw_plan(bundle.law, m, draw_from(cfg, "without_replacement_dc"),
                                   mode_from(cfg, "unweighted"), channel_count(bundle.generator),
                                   Rng(bundle.seed).derive(1).next_u64());
  const fs::path plan_path = fs::path(args.out) / "plan.json";
  write_text(plan_path, to_json(plan));
  std::string extra;
  if (cfg.contains("signal_file")) {
    std::ifstream in(require_str(cfg, "signal_file"));
    if (!in) fail("signal_file", "cannot open");
    Signal f = signal_from_csv(in);
    Measurements meas = apply(plan, f);
    const double noise = num_or(cfg, "noise_scale", 0.0);
    if (noise > 0.0)
      meas = add_noise(plan, meas, noise, plan.mode == MeasurementPlan::Mode::weighted,
                       Rng(bundle.seed).derive(2).next_u64());
    std::stringstream ss;
    to_csv(meas, plan.channels, ss);
    write_text(fs::path(args.out) / "measurements.csv", ss.str());
    extra = " measurements=measurements.csv";
  }
  std::cout << "sample: prompt=" << bundle.prompt << " m=" << plan.m << extra << " -> "
            << plan_path.string() << "\n";
  return 0;
}

int run_recover(const CommonArgs& args) {
  const json cfg = load_config(args.config);
  check_allowed(cfg, {"generator", "generator_file", "family", "prompt", "plan_file",
                      "measurements_file", "reference_file", "recovery"});
  GeneratorSpec G = generator_from_config_json(cfg.dump());
  const ConditionId prompt = require_str(cfg, "prompt");
  MeasurementPlan plan = plan_from_json(read_file(require_str(cfg, "plan_file")));
  std::ifstream meas_in(require_str(cfg, "measurements_file"));
  if (!meas_in) fail("measurements_file", "cannot open");
  Measurements meas = measurements_from_csv(meas_in);

  RecoveryConfig rc;
  if (cfg.contains("recovery")) {
    // reuse the experiment-config field names and error paths
    const json shell = {{"generator", json::parse(generator_to_json(G))},
                        {"prompts", json::array({prompt})},
                        {"ratios", json::array({1.0})},
                        {"recovery", cfg.at("recovery")}};
    rc = experiment_config_from_json(shell.dump()).recovery;
  }
  if (args.has_seed) rc.seed = args.seed;

  RecoveryResult res = recover(G, prompt, plan, meas, rc);
  const fs::path out = fs::path(args.out) / "result.json";
  write_text(out, to_json(res, rc));
  std::cout << "recover: prompt=" << prompt << " residual=" << res.residual
            << " steps=" << res.steps_used << " restart=" << res.restart_index;
  if (cfg.contains("reference_file")) {
    std::ifstream ref_in(require_str(cfg, "reference_file"));
    if (!ref_in) fail("reference_file", "cannot open");
    Signal ref = signal_from_csv(ref_in);
    std::cout << " rel_error=" << relative_error(ref, res.f_hat);
  }
  std::cout << " -> " << out.string() << "\n";
  return 0;
}

int run_verify(const CommonArgs& args, const std::string& check) {
  const json cfg = load_config(args.config);
  if (check == "nondegeneracy" || check == "srec")
    check_allowed(cfg, with_bundle_keys({"m", "tau", "method", "probes"}));
  else if (check == "concentration")
    check_allowed(cfg, with_bundle_keys({"h_mode", "m_grid", "eps", "trials_per_m"}));
  else if (check == "net_extension")
    check_allowed(cfg, with_bundle_keys({"eta", "eps", "m", "pool", "probes", "max_size",
                                         "rounds"}));
  LawBundle bundle = law_bundle(cfg, args.seed, args.has_seed);
  const int C = channel_count(bundle.generator);
  const fs::path reports = fs::path(args.out) / "reports";
  Rng root(bundle.seed);

  if (check == "nondegeneracy" || check == "srec") {
    const auto m = static_cast<Eigen::Index>(int_or(cfg, "m", 0));
    if (m <= 0) fail("m", "must be a positive integer");
    const double tau = require_num(cfg, "tau");
    const std::string method_name = str_or(cfg, "method", "exact_spectral");
    NondegeneracyReport::Method method;
    if (method_name == "exact_spectral")
      method = NondegeneracyReport::Method::exact_spectral;
    else if (method_name == "sampled")
      method = NondegeneracyReport::Method::sampled;
    else
      fail("method", "expected 'exact_spectral' or 'sampled'");
    ConeDecomposition decomp = enumerate_cones(bundle.generator, bundle.prompt);
    MeasurementPlan plan =
        draw_plan(bundle.law, m, MeasurementPlan::DrawMode::iid_with_replacement,
                  MeasurementPlan::Mode::weighted, C, root.derive(1).next_u64());
    NondegeneracyReport report = check_nondegeneracy(decomp, plan, tau, method,
                                                     int_or(cfg, "probes", 100000),
                                                     root.derive(2).next_u64());
    write_text(reports / "nondegeneracy.json", to_json(report));
    if (check == "nondegeneracy") {
      std::cout << "verify nondegeneracy: tau_hat=" << report.tau_hat << " tau=" << tau
                << (report.pass ? " pass" : " FAIL") << " -> "
                << (reports / "nondegeneracy.json").string() << "\n";
      return report.pass ? 0 : 2;
    }
    SrecReport srec = check_srec(report);
    write_text(reports / "srec.json", to_json(srec));
    std::cout << "verify srec: gamma=" << srec.gamma << " q=" << srec.q
              << " tau_hat=" << srec.tau_hat << (report.pass ? " pass" : " FAIL") << " -> "
              << (reports / "srec.json").string() << "\n";
    return report.pass ? 0 : 2;
  }

  if (check == "concentration") {
    const std::string mode = str_or(cfg, "h_mode", "secant");
    ConcentrationTarget target;
    if (mode == "secant")
      target = ConcentrationTarget::secant;
    else if (mode == "impulse")
      target = ConcentrationTarget::impulse;
    else
      fail("h_mode", "expected 'secant' or 'impulse'");
    if (!cfg.contains("m_grid") || !cfg.at("m_grid").is_array() || cfg.at("m_grid").empty())
      fail("m_grid", "expected a nonempty integer array");
    std::vector<Eigen::Index> grid;
    for (const auto& v : cfg.at("m_grid")) {
      if (!v.is_number_integer()) fail("m_grid", "expected a nonempty integer array");
      grid.push_back(v.get<Eigen::Index>());
    }
    ConcentrationTable table =
        concentration_experiment(bundle.generator, bundle.prompt, bundle.law, target, grid,
                                 num_or(cfg, "eps", 0.5), int_or(cfg, "trials_per_m", 1000),
                                 root.derive(3).next_u64());
    std::stringstream ss;
    to_csv(table, ss);
    write_text(reports / "concentration.csv", ss.str());
    const bool pass = table.unbiased && table.monotone_trend;
    std::cout << "verify concentration: unbiased=" << (table.unbiased ? "yes" : "no")
              << " monotone=" << (table.monotone_trend ? "yes" : "no")
              << (pass ? " pass" : " FAIL") << " -> " << (reports / "concentration.csv").string()
              << "\n";
    return pass ? 0 : 2;
  }

  if (check == "net_extension") {
    const double eta = require_num(cfg, "eta");
    const double eps = require_num(cfg, "eps");
    const auto m = static_cast<Eigen::Index>(int_or(cfg, "m", 0));
    if (m <= 0) fail("m", "must be a positive integer");
    SecantNetOptions opts;
    opts.pool = int_or(cfg, "pool", opts.pool);
    opts.probes = int_or(cfg, "probes", opts.probes);
    opts.max_size = static_cast<std::size_t>(int_or(cfg, "max_size",
                                                    static_cast<long>(opts.max_size)));
    opts.rounds = static_cast<int>(int_or(cfg, "rounds", opts.rounds));
    opts.seed = root.derive(4).next_u64();
    SecantNet net = build_secant_net(bundle.generator, bundle.prompt, eta, bundle.law, opts);
    MeasurementPlan plan =
        draw_plan(bundle.law, m, MeasurementPlan::DrawMode::iid_with_replacement,
                  MeasurementPlan::Mode::weighted, C, root.derive(5).next_u64());
    NetExtensionReport report = net_extension_check(net, bundle.generator, bundle.prompt, plan,
                                                    eps, opts.probes, root.derive(6).next_u64());
    write_text(reports / "net_extension.json", to_json(report));
    const bool pass = report.status == NetExtensionReport::Status::holds &&
                      net.status == SecantNet::Status::certified;
    std::cout << "verify net_extension: net_size=" << net.points.size()
              << " worst_slack=" << report.worst_slack << (pass ? " pass" : " FAIL") << " -> "
              << (reports / "net_extension.json").string() << "\n";
    return pass ? 0 : 2;
  }

  throw InvalidInputError("verify: unknown check '" + check + "'");
}

int run_experiment(const CommonArgs& args) {
  ExperimentConfig cfg = experiment_from_args(args);
  const std::string dir = run_experiment_to_dir(cfg, args.out);
  if (cfg.kind == ExperimentConfig::Kind::lambda_grid) {
    std::cout << "experiment: kind=lambda_grid prompts=" << cfg.prompts.size() << " -> " << dir
              << "\n";
  } else {
    const std::size_t rows =
        cfg.prompts.size() * cfg.prompts.size() * cfg.ratios.size() *
        static_cast<std::size_t>(cfg.trials) * 2;
    std::cout << "experiment: kind=reconstruction rows=" << rows << " -> " << dir << "\n";
  }
  return 0;
}

int run_complexity(const CommonArgs& args, const std::string& regime) {
  const json cfg = load_config(args.config);
  if (regime == "relu")
    check_allowed(cfg, {"constant", "widths", "k", "d", "tau", "delta", "mu_min", "lambda"});
  else if (regime == "lipschitz")
    check_allowed(cfg, {"constant", "k", "L", "R", "xi", "tau", "delta", "mu_min", "lambda"});
  else if (regime == "piecewise_linear")
    check_allowed(cfg, {"constant", "N", "k", "tau", "delta", "mu_min", "lambda"});
  else if (regime == "net_based")
    check_allowed(cfg, {"constant", "net_size", "tau", "delta", "lambda"});
  const double constant = args.has_constant ? args.constant : num_or(cfg, "constant", 1.0);
  ComplexityBudget budget;
  if (regime == "relu") {
    std::vector<Eigen::Index> widths;
    if (!cfg.contains("widths") || !cfg.at("widths").is_array())
      fail("widths", "expected an integer array of hidden widths");
    for (const auto& v : cfg.at("widths")) {
      if (!v.is_number_integer()) fail("widths", "expected an integer array of hidden widths");
      widths.push_back(v.get<Eigen::Index>());
    }
    budget = complexity_relu(static_cast<Eigen::Index>(int_or(cfg, "k", 0)),
                             static_cast<int>(int_or(cfg, "d", 0)), widths,
                             require_num(cfg, "tau"), require_num(cfg, "delta"),
                             require_num(cfg, "mu_min"), require_num(cfg, "lambda"), constant);
  } else if (regime == "lipschitz") {
    budget = complexity_lipschitz(static_cast<Eigen::Index>(int_or(cfg, "k", 0)),
                                  require_num(cfg, "L"), require_num(cfg, "R"),
                                  require_num(cfg, "xi"), require_num(cfg, "tau"),
                                  require_num(cfg, "delta"), require_num(cfg, "mu_min"),
                                  require_num(cfg, "lambda"), constant);
  } else if (regime == "piecewise_linear") {
    budget = complexity_piecewise(require_num(cfg, "N"),
                                  static_cast<Eigen::Index>(int_or(cfg, "k", 0)),
                                  require_num(cfg, "tau"), require_num(cfg, "delta"),
                                  require_num(cfg, "mu_min"), require_num(cfg, "lambda"),
                                  constant);
  } else if (regime == "net_based") {
    budget = complexity_net_based(require_num(cfg, "net_size"), require_num(cfg, "tau"),
                                  require_num(cfg, "delta"), require_num(cfg, "lambda"),
                                  constant);
  } else {
    throw InvalidInputError("complexity: unknown regime '" + regime + "'");
  }
  write_text(fs::path(args.out) / "complexity.json", to_json(budget));
  std::cout << "complexity: regime=" << regime << " constant=" << budget.constant
            << " m_required=" << budget.m_required << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prompt-conditioned generative compressed sensing toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string check;
  std::string regime;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    auto* config = cmd->add_option("--config", args.config, "JSON config path");
    if (needs_config) config->required();
    cmd->add_option("--out", args.out, "output directory");
    auto* seed = cmd->add_option("--seed", args.seed, "seed override");
    cmd->parse_complete_callback([&, seed] { args.has_seed = seed->count() > 0; });
  };

  CLI::App* christoffel = app.add_subcommand("christoffel", "estimate per-frequency energy");
  add_common(christoffel);
  CLI::App* law = app.add_subcommand("law", "derive a sampling law");
  add_common(law);
  CLI::App* lambda = app.add_subcommand("lambda", "cross-prompt compatibility grid");
  add_common(lambda);
  lambda->add_option("--workers", args.workers, "worker threads");
  CLI::App* sample = app.add_subcommand("sample", "draw a measurement plan");
  add_common(sample);
  CLI::App* recover = app.add_subcommand("recover", "latent-space recovery from measurements");
  add_common(recover);
  CLI::App* verify = app.add_subcommand("verify", "run an empirical verification check");
  add_common(verify);
  verify->add_option("--check", check, "nondegeneracy | srec | concentration | net_extension")
      ->required();
  CLI::App* experiment = app.add_subcommand("experiment", "run a configured sweep");
  add_common(experiment);
  experiment->add_option("--workers", args.workers, "worker threads");
  CLI::App* complexity = app.add_subcommand("complexity", "measurement budget for a regime");
  add_common(complexity);
  complexity->add_option("--regime", regime,
                         "relu | lipschitz | piecewise_linear | net_based")
      ->required();
  auto* constant_opt = complexity->add_option("--constant", args.constant, "budget constant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  args.has_constant = constant_opt->count() > 0;

  try {
    if (app.got_subcommand(christoffel)) return run_christoffel(args);
    if (app.got_subcommand(law)) return run_law(args);
    if (app.got_subcommand(lambda)) return run_lambda(args);
    if (app.got_subcommand(sample)) return run_sample(args);
    if (app.got_subcommand(recover)) return run_recover(args);
    if (app.got_subcommand(verify)) return run_verify(args, check);
    if (app.got_subcommand(experiment)) return run_experiment(args);
    if (app.got_subcommand(complexity)) return run_complexity(args, regime);
  } catch (const NoCertificateError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
