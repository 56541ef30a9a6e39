#include "gcs/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw InvalidInputError("config." + path + ": " + why);
}

// Error paths are full dotted paths; the JSON key is the last segment.
std::string leaf(const std::string& path) {
  const auto p = path.rfind('.');
  return p == std::string::npos ? path : path.substr(p + 1);
}

const json& member(const json& j, const std::string& path) {
  auto it = j.find(leaf(path));
  if (it == j.end()) fail(path, "missing");
  return *it;
}

double num_field(const json& j, const std::string& path) {
  const json& v = member(j, path);
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& path, double fallback) {
  if (!j.contains(leaf(path))) return fallback;
  const json& v = j.at(leaf(path));
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

long int_or(const json& j, const std::string& path, long fallback) {
  if (!j.contains(leaf(path))) return fallback;
  const json& v = j.at(leaf(path));
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

std::uint64_t u64_or(const json& j, const std::string& path, std::uint64_t fallback) {
  if (!j.contains(leaf(path))) return fallback;
  const json& v = j.at(leaf(path));
  if (!v.is_number_unsigned() && !v.is_number_integer()) fail(path, "expected an integer seed");
  if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
    fail(path, "seed must be nonnegative");
  return v.get<std::uint64_t>();
}

std::string str_or(const json& j, const std::string& path, const std::string& fallback) {
  if (!j.contains(leaf(path))) return fallback;
  const json& v = j.at(leaf(path));
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

bool bool_or(const json& j, const std::string& path, bool fallback) {
  if (!j.contains(leaf(path))) return fallback;
  const json& v = j.at(leaf(path));
  if (!v.is_boolean()) fail(path, "expected a boolean");
  return v.get<bool>();
}

void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown field");
}

GeneratorSpec family_from_json(const json& f) {
  if (!f.is_object()) fail("family", "expected an object");
  check_keys(f, "family",
             {"kind", "channels", "n", "radius", "thetas", "seed", "k", "envelope_decay",
              "widths"});
  const std::string kind = str_or(f, "family.kind", "");
  if (kind != "linear" && kind != "relu") fail("family.kind", "expected 'linear' or 'relu'");
  const int channels = static_cast<int>(int_or(f, "family.channels", 1));
  const auto n = static_cast<Eigen::Index>(int_or(f, "family.n", 0));
  if (n <= 0) fail("family.n", "per-channel length must be positive");
  const double radius = num_field(f, "family.radius");
  const json& th = member(f, "family.thetas");
  if (!th.is_object() || th.empty()) fail("family.thetas", "expected a nonempty object");
  std::vector<std::pair<ConditionId, double>> thetas;
  for (auto it = th.begin(); it != th.end(); ++it) {
    if (!it.value().is_number()) fail("family.thetas." + it.key(), "expected a number");
    thetas.emplace_back(it.key(), it.value().get<double>());
  }
  const std::uint64_t seed = u64_or(f, "family.seed", 0);
  if (kind == "linear") {
    const auto k = static_cast<Eigen::Index>(int_or(f, "family.k", 0));
    if (k <= 0) fail("family.k", "latent dimension must be positive");
    const double decay = num_or(f, "family.envelope_decay", 4.0);
    return tightness_linear_family(k, channels, n, radius, decay, thetas, seed);
  }
  const json& w = member(f, "family.widths");
  if (!w.is_array() || w.empty()) fail("family.widths", "expected a nonempty integer array");
  std::vector<Eigen::Index> widths;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w[i].is_number_integer()) fail("family.widths", "expected a nonempty integer array");
    widths.push_back(w[i].get<Eigen::Index>());
  }
  return tightness_relu_family(widths, channels, n, radius, thetas, seed);
}

RecoveryConfig recovery_from_json(const json& r) {
  if (!r.is_object()) fail("recovery", "expected an object");
  check_keys(r, "recovery",
             {"max_steps", "base_lr", "lr_schedule", "grad_clip", "patience", "restarts", "init",
              "stagnation_tol", "adaptive_scaling", "seed"});
  RecoveryConfig cfg;
  cfg.max_steps = static_cast<int>(int_or(r, "recovery.max_steps", cfg.max_steps));
  cfg.base_lr = num_or(r, "recovery.base_lr", cfg.base_lr);
  const std::string sched = str_or(r, "recovery.lr_schedule", "cosine");
  if (sched == "constant")
    cfg.lr_schedule = RecoveryConfig::LrSchedule::constant;
  else if (sched == "cosine")
    cfg.lr_schedule = RecoveryConfig::LrSchedule::cosine;
  else
    fail("recovery.lr_schedule", "expected 'constant' or 'cosine'");
  cfg.grad_clip = num_or(r, "recovery.grad_clip", cfg.grad_clip);
  cfg.patience = static_cast<int>(int_or(r, "recovery.patience", cfg.patience));
  cfg.restarts = static_cast<int>(int_or(r, "recovery.restarts", cfg.restarts));
  const std::string init = str_or(r, "recovery.init", "zero_filled");
  if (init == "zero_filled")
    cfg.init = RecoveryConfig::Init::zero_filled;
  else if (init == "random")
    cfg.init = RecoveryConfig::Init::random;
  else
    fail("recovery.init", "expected 'zero_filled' or 'random'");
  cfg.stagnation_tol = num_or(r, "recovery.stagnation_tol", cfg.stagnation_tol);
  cfg.adaptive_scaling = bool_or(r, "recovery.adaptive_scaling", cfg.adaptive_scaling);
  cfg.seed = u64_or(r, "recovery.seed", cfg.seed);
  return cfg;
}

json recovery_to_json_obj(const RecoveryConfig& cfg) {
  json r;
  r["max_steps"] = cfg.max_steps;
  r["base_lr"] = cfg.base_lr;
  r["lr_schedule"] = cfg.lr_schedule == RecoveryConfig::LrSchedule::constant ? "constant" : "cosine";
  r["grad_clip"] = cfg.grad_clip;
  r["patience"] = cfg.patience;
  r["restarts"] = cfg.restarts;
  r["init"] = cfg.init == RecoveryConfig::Init::random ? "random" : "zero_filled";
  r["stagnation_tol"] = cfg.stagnation_tol;
  r["adaptive_scaling"] = cfg.adaptive_scaling;
  r["seed"] = cfg.seed;
  return r;
}

std::string scenario_name(ExperimentConfig::Scenario s) {
  switch (s) {
    case ExperimentConfig::Scenario::in_range_matched: return "in_range_matched";
    case ExperimentConfig::Scenario::in_range_mismatched: return "in_range_mismatched";
    case ExperimentConfig::Scenario::out_of_range: return "out_of_range";
  }
  return "in_range_matched";
}

std::uint64_t seed_for(const ExperimentConfig& config, std::uint64_t tag) {
  return Rng(config.seed).derive(tag).next_u64();
}

struct LawPack {
  std::map<ConditionId, ChristoffelEstimate> estimates;
  std::map<ConditionId, SamplingLaw> laws;
  std::vector<char> degenerate;
};

SamplingLaw uniform_law_of(Eigen::Index n, double kappa) {
  SamplingLaw law;
  law.probs = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  law.min_prob = 1.0 / static_cast<double>(n);
  law.floor_applied = false;
  law.kappa = kappa;
  return law;
}

// Christoffel estimate + law per prompt. Every prompt reuses the same latent
// stream (common random numbers), so prompts with identical weights get
// bitwise-identical estimates and laws.
LawPack compute_laws(const ExperimentConfig& config) {
  LawPack pack;
  pack.degenerate.assign(config.prompts.size(), 0);
  const LatentLaw latent{};
  const std::uint64_t mc_seed = seed_for(config, 1000);
  for (std::size_t i = 0; i < config.prompts.size(); ++i) {
    const ConditionId& c = config.prompts[i];
    try {
      ChristoffelEstimate K = christoffel_monte_carlo(config.generator, c, c, latent,
                                                      config.christoffel_trials, mc_seed);
      SamplingLaw law = config.law == ExperimentConfig::LawMode::uniform
                            ? uniform_law_of(K.values.size(), K.values.sum())
                            : sampling_law(K, config.law_floor);
      pack.estimates.emplace(c, std::move(K));
      pack.laws.emplace(c, std::move(law));
    } catch (const DegenerateClassError&) {
      pack.degenerate[i] = 1;
    }
  }
  return pack;
}

double max_abs_entry(const Signal& s) {
  double peak = 0.0;
  for (Eigen::Index i = 0; i < s.data.size(); ++i) peak = std::max(peak, std::abs(s.data(i)));
  return peak;
}

// Zero-filled baseline on the classical scale: the adjoint inverts the
// 1/sqrt(m) * sqrt(w) factors in expectation for weighted rows, and needs
// the extra m for unweighted rows.
Signal baseline_signal(const MeasurementPlan& plan, const Measurements& meas) {
  Signal s = adjoint(plan, meas);
  if (plan.mode == MeasurementPlan::Mode::unweighted)
    s.data *= static_cast<double>(plan.m);
  return s;
}

struct CellJob {
  std::size_t index = 0;
  std::size_t si = 0, ri = 0, qi = 0;
};

}  // namespace

void validate(const ExperimentConfig& config) {
  validate(config.generator);
  if (config.prompts.empty()) fail("prompts", "must be nonempty");
  std::set<ConditionId> seen;
  for (std::size_t i = 0; i < config.prompts.size(); ++i) {
    const ConditionId& c = config.prompts[i];
    const std::string path = "prompts[" + std::to_string(i) + "]";
    if (c.empty() || c.find(',') != std::string::npos || c.find('\n') != std::string::npos)
      fail(path, "prompt ids must be nonempty and csv-safe");
    if (!has_condition(config.generator, c)) fail(path, "unknown condition '" + c + "'");
    if (!seen.insert(c).second) fail(path, "duplicate prompt '" + c + "'");
  }
  if (config.ratios.empty()) fail("ratios", "must be nonempty");
  for (std::size_t i = 0; i < config.ratios.size(); ++i)
    if (!(config.ratios[i] > 0.0) || !(config.ratios[i] <= 1.0) ||
        !std::isfinite(config.ratios[i]))
      fail("ratios[" + std::to_string(i) + "]", "must be in (0, 1]");
  if (config.trials < 1) fail("trials", "must be >= 1");
  if (config.christoffel_trials < 1) fail("christoffel_trials", "must be >= 1");
  const bool weighted = config.mode == MeasurementPlan::Mode::weighted;
  const bool iid = config.draw_mode == MeasurementPlan::DrawMode::iid_with_replacement;
  if (weighted != iid)
    fail("mode", weighted ? "weighted sampling pairs with iid_with_replacement draws"
                          : "unweighted sampling pairs with without_replacement_dc draws");
  try {
    validate(config.recovery);
  } catch (const InvalidInputError& e) {
    fail("recovery", e.what());
  }
  if (config.recovery.init == RecoveryConfig::Init::provided)
    fail("recovery.init", "provided inits are not replayable across a grid");
  if (!(config.noise_scale >= 0.0) || !std::isfinite(config.noise_scale))
    fail("noise_scale", "must be finite and >= 0");
  if (!(config.law_floor > 0.0) || !std::isfinite(config.law_floor))
    fail("law_floor", "must be finite and > 0");
  if (config.workers < 1) fail("workers", "must be >= 1");
  if (config.scenario == ExperimentConfig::Scenario::in_range_mismatched) {
    if (!has_condition(config.generator, config.target_prompt))
      fail("target_prompt", "unknown condition '" + config.target_prompt + "'");
  }
  if (config.scenario == ExperimentConfig::Scenario::out_of_range) {
    if (config.out_of_range_target.size() != ambient_dim(config.generator))
      fail("out_of_range_target",
           "expected length " + std::to_string(ambient_dim(config.generator)));
    if (!config.out_of_range_target.allFinite())
      fail("out_of_range_target", "entries must be finite");
    if (config.out_of_range_target.norm() == 0.0)
      fail("out_of_range_target", "must be nonzero");
  }
}

namespace {

GeneratorSpec generator_source_from_obj(const json& j) {
  const int sources = static_cast<int>(j.contains("generator")) +
                      static_cast<int>(j.contains("generator_file")) +
                      static_cast<int>(j.contains("family"));
  if (sources != 1) fail("generator", "exactly one of generator, generator_file, family required");
  if (j.contains("generator")) {
    try {
      return generator_from_json(j.at("generator").dump());
    } catch (const InvalidInputError& e) {
      fail("generator", e.what());
    }
  }
  if (j.contains("generator_file")) {
    const json& v = j.at("generator_file");
    if (!v.is_string()) fail("generator_file", "expected a path string");
    std::ifstream in(v.get<std::string>());
    if (!in) fail("generator_file", "cannot open '" + v.get<std::string>() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return generator_from_json(ss.str());
    } catch (const InvalidInputError& e) {
      fail("generator_file", e.what());
    }
  }
  return family_from_json(j.at("family"));
}

json parse_config_object(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("config: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInputError("config: expected a JSON object");
  return j;
}

}  // namespace

GeneratorSpec generator_from_config_json(const std::string& text) {
  return generator_source_from_obj(parse_config_object(text));
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = parse_config_object(text);
  check_keys(j, "",
             {"kind", "generator", "generator_file", "family", "prompts", "ratios", "trials",
              "draw_mode", "mode", "law", "recovery", "christoffel_trials", "seed", "scenario",
              "target_prompt", "out_of_range_target", "noise_scale", "law_floor", "workers"});
  ExperimentConfig cfg;

  const std::string kind = str_or(j, "kind", "reconstruction");
  if (kind == "lambda_grid")
    cfg.kind = ExperimentConfig::Kind::lambda_grid;
  else if (kind == "reconstruction")
    cfg.kind = ExperimentConfig::Kind::reconstruction;
  else
    fail("kind", "expected 'lambda_grid' or 'reconstruction'");

  cfg.generator = generator_source_from_obj(j);

  const json& prompts = member(j, "prompts");
  if (!prompts.is_array()) fail("prompts", "expected an array of condition ids");
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (!prompts[i].is_string()) fail("prompts[" + std::to_string(i) + "]", "expected a string");
    cfg.prompts.push_back(prompts[i].get<std::string>());
  }
  const json& ratios = member(j, "ratios");
  if (!ratios.is_array()) fail("ratios", "expected an array of numbers");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!ratios[i].is_number()) fail("ratios[" + std::to_string(i) + "]", "expected a number");
    cfg.ratios.push_back(ratios[i].get<double>());
  }
  cfg.trials = static_cast<int>(int_or(j, "trials", cfg.trials));

  const std::string draw = str_or(j, "draw_mode", "without_replacement_dc");
  if (draw == "iid_with_replacement")
    cfg.draw_mode = MeasurementPlan::DrawMode::iid_with_replacement;
  else if (draw == "without_replacement_dc")
    cfg.draw_mode = MeasurementPlan::DrawMode::without_replacement_dc;
  else
    fail("draw_mode", "expected 'iid_with_replacement' or 'without_replacement_dc'");
  const std::string mode = str_or(j, "mode", "unweighted");
  if (mode == "weighted")
    cfg.mode = MeasurementPlan::Mode::weighted;
  else if (mode == "unweighted")
    cfg.mode = MeasurementPlan::Mode::unweighted;
  else
    fail("mode", "expected 'weighted' or 'unweighted'");
  const std::string law = str_or(j, "law", "matched");
  if (law == "matched")
    cfg.law = ExperimentConfig::LawMode::matched;
  else if (law == "uniform")
    cfg.law = ExperimentConfig::LawMode::uniform;
  else
    fail("law", "expected 'matched' or 'uniform'");

  if (j.contains("recovery")) cfg.recovery = recovery_from_json(j.at("recovery"));
  cfg.christoffel_trials = int_or(j, "christoffel_trials", cfg.christoffel_trials);
  cfg.seed = u64_or(j, "seed", 0);

  const std::string scenario = str_or(j, "scenario", "in_range_matched");
  if (scenario == "in_range_matched")
    cfg.scenario = ExperimentConfig::Scenario::in_range_matched;
  else if (scenario == "in_range_mismatched")
    cfg.scenario = ExperimentConfig::Scenario::in_range_mismatched;
  else if (scenario == "out_of_range")
    cfg.scenario = ExperimentConfig::Scenario::out_of_range;
  else
    fail("scenario", "unknown scenario '" + scenario + "'");
  cfg.target_prompt = str_or(j, "target_prompt", "");

  if (j.contains("out_of_range_target")) {
    const json& t = j.at("out_of_range_target");
    if (!t.is_object() || !t.contains("re") || !t.at("re").is_array())
      fail("out_of_range_target", "expected an object with 're' (and optional 'im') arrays");
    const json& re = t.at("re");
    cfg.out_of_range_target.resize(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
      if (!re[i].is_number()) fail("out_of_range_target.re", "expected numbers");
      cfg.out_of_range_target(static_cast<Eigen::Index>(i)) = re[i].get<double>();
    }
    if (t.contains("im")) {
      const json& im = t.at("im");
      if (!im.is_array() || im.size() != re.size())
        fail("out_of_range_target.im", "length must match 're'");
      for (std::size_t i = 0; i < im.size(); ++i) {
        if (!im[i].is_number()) fail("out_of_range_target.im", "expected numbers");
        cfg.out_of_range_target(static_cast<Eigen::Index>(i)) +=
            std::complex<double>(0.0, im[i].get<double>());
      }
    }
  }

  cfg.noise_scale = num_or(j, "noise_scale", cfg.noise_scale);
  cfg.law_floor = num_or(j, "law_floor", cfg.law_floor);
  cfg.workers = static_cast<int>(int_or(j, "workers", cfg.workers));
  validate(cfg);
  return cfg;
}

std::string to_json(const ExperimentConfig& config) {
  json j;
  j["kind"] = config.kind == ExperimentConfig::Kind::lambda_grid ? "lambda_grid" : "reconstruction";
  j["generator"] = json::parse(generator_to_json(config.generator));
  j["prompts"] = config.prompts;
  j["ratios"] = config.ratios;
  j["trials"] = config.trials;
  j["draw_mode"] = config.draw_mode == MeasurementPlan::DrawMode::iid_with_replacement
                       ? "iid_with_replacement"
                       : "without_replacement_dc";
  j["mode"] = config.mode == MeasurementPlan::Mode::weighted ? "weighted" : "unweighted";
  j["law"] = config.law == ExperimentConfig::LawMode::uniform ? "uniform" : "matched";
  j["recovery"] = recovery_to_json_obj(config.recovery);
  j["christoffel_trials"] = config.christoffel_trials;
  j["seed"] = config.seed;
  j["scenario"] = scenario_name(config.scenario);
  if (!config.target_prompt.empty()) j["target_prompt"] = config.target_prompt;
  if (config.out_of_range_target.size() > 0) {
    json t;
    std::vector<double> re(config.out_of_range_target.size());
    std::vector<double> im(config.out_of_range_target.size());
    for (Eigen::Index i = 0; i < config.out_of_range_target.size(); ++i) {
      re[static_cast<std::size_t>(i)] = config.out_of_range_target(i).real();
      im[static_cast<std::size_t>(i)] = config.out_of_range_target(i).imag();
    }
    t["re"] = re;
    t["im"] = im;
    j["out_of_range_target"] = t;
  }
  j["noise_scale"] = config.noise_scale;
  j["law_floor"] = config.law_floor;
  j["workers"] = config.workers;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  // Worker count is an execution detail; the hash covers only fields that
  // determine results, so replays under any thread count share a run id.
  ExperimentConfig normalized = config;
  normalized.workers = 1;
  const std::string s = to_json(normalized);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LambdaGrid run_lambda_grid(const ExperimentConfig& config) {
  validate(config);
  LambdaGrid grid;
  grid.prompts = config.prompts;
  LawPack pack = compute_laws(config);
  grid.degenerate = pack.degenerate;
  grid.estimates = std::move(pack.estimates);
  grid.laws = std::move(pack.laws);
  const auto p = static_cast<Eigen::Index>(config.prompts.size());
  grid.lambda = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index s = 0; s < p; ++s) {
    if (grid.degenerate[static_cast<std::size_t>(s)]) continue;
    const SamplingLaw& law = grid.laws.at(config.prompts[static_cast<std::size_t>(s)]);
    for (Eigen::Index r = 0; r < p; ++r) {
      if (grid.degenerate[static_cast<std::size_t>(r)]) continue;
      const ChristoffelEstimate& K = grid.estimates.at(config.prompts[static_cast<std::size_t>(r)]);
      grid.lambda(s, r) = compatibility_factor(K, law).value;
    }
  }
  return grid;
}

std::vector<ResultRow> run_reconstruction_grid(const ExperimentConfig& config) {
  validate(config);
  const Eigen::Index n = signal_len(config.generator);
  const int C = channel_count(config.generator);
  LawPack pack = compute_laws(config);
  for (std::size_t i = 0; i < config.prompts.size(); ++i)
    if (pack.degenerate[i])
      throw DegenerateClassError("run_reconstruction_grid: prompt '" + config.prompts[i] +
                                 "' has a degenerate secant class, no sampling law exists");

  // Fixed targets: one latent per prompt position, shared by every cell that
  // recovers under that prompt, so cells differ only in masks and laws.
  std::vector<Signal> prompt_targets(config.prompts.size());
  for (std::size_t p = 0; p < config.prompts.size(); ++p) {
    Rng r = Rng(config.seed).derive(2000 + p);
    Eigen::VectorXd z = draw_latent(LatentLaw{}, latent_ball(config.generator), r);
    prompt_targets[p] = generate(config.generator, z, config.prompts[p]);
  }
  Signal fixed_target;
  if (config.scenario == ExperimentConfig::Scenario::in_range_mismatched) {
    Rng r = Rng(config.seed).derive(2999);
    Eigen::VectorXd z = draw_latent(LatentLaw{}, latent_ball(config.generator), r);
    fixed_target = generate(config.generator, z, config.target_prompt);
  } else if (config.scenario == ExperimentConfig::Scenario::out_of_range) {
    fixed_target = make_signal(config.out_of_range_target, C);
  }

  const std::size_t P = config.prompts.size();
  const std::size_t Q = config.ratios.size();
  std::vector<CellJob> cells;
  cells.reserve(P * P * Q);
  for (std::size_t si = 0; si < P; ++si)
    for (std::size_t ri = 0; ri < P; ++ri)
      for (std::size_t qi = 0; qi < Q; ++qi)
        cells.push_back({cells.size(), si, ri, qi});

  const std::string scen = scenario_name(config.scenario);
  const std::string hash = config_hash(config);
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<ResultRow> rows(cells.size() * trials * 2);

  auto run_cell = [&](const CellJob& cell) {
    const ConditionId& c_s = config.prompts[cell.si];
    const ConditionId& c_r = config.prompts[cell.ri];
    const double ratio = config.ratios[cell.qi];
    const auto m = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(ratio * static_cast<double>(n))), 1, n);
    const Signal& target = config.scenario == ExperimentConfig::Scenario::in_range_matched
                               ? prompt_targets[cell.ri]
                               : fixed_target;
    const double peak = std::max(max_abs_entry(target), 1e-300);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng tr = Rng(config.seed).derive(3000 + cell.index).derive(t);
      const std::uint64_t plan_seed = tr.next_u64();
      const std::uint64_t noise_seed = tr.next_u64();
      const std::uint64_t rec_seed = tr.next_u64();
      MeasurementPlan plan =
          draw_plan(pack.laws.at(c_s), m, config.draw_mode, config.mode, C, plan_seed);
      Measurements meas = apply(plan, target);
      if (config.noise_scale > 0.0)
        meas = add_noise(plan, meas, config.noise_scale,
                         config.mode == MeasurementPlan::Mode::weighted, noise_seed);

      ResultRow row;
      row.scenario = scen;
      row.c_s = c_s;
      row.c_r = c_r;
      row.ratio = ratio;
      row.trial = static_cast<int>(t);
      row.seed = plan_seed;
      row.peak = peak;
      row.config_hash = hash;

      const auto t0 = std::chrono::steady_clock::now();
      try {
        RecoveryConfig rc = config.recovery;
        rc.seed = rec_seed;
        RecoveryResult res = recover(config.generator, c_r, plan, meas, rc);
        row.method = "recovery";
        row.psnr_db = psnr(target, res.f_hat, peak);
        row.rel_error = relative_error(target, res.f_hat);
        row.residual = res.residual;
        row.steps = res.steps_used;
      } catch (const DivergenceError&) {
        row.method = "diverged";
        row.psnr_db = std::numeric_limits<double>::quiet_NaN();
        row.rel_error = std::numeric_limits<double>::quiet_NaN();
        row.residual = std::numeric_limits<double>::quiet_NaN();
        row.steps = 0;
      }
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      ResultRow base = row;
      const auto b0 = std::chrono::steady_clock::now();
      Signal zf = baseline_signal(plan, meas);
      base.method = "zero_filled";
      base.psnr_db = psnr(target, zf, peak);
      base.rel_error = relative_error(target, zf);
      base.residual = (apply(plan, zf).y - meas.y).squaredNorm() /
                      (2.0 * static_cast<double>(C) * static_cast<double>(m));
      base.steps = 0;
      base.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - b0).count();

      const std::size_t slot = (cell.index * trials + t) * 2;
      rows[slot] = std::move(row);
      rows[slot + 1] = std::move(base);
    }
  };

  const int workers = std::min<int>(config.workers, static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (const CellJob& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto drain = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) break;
        try {
          run_cell(cells[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const ResultRow& row : rows) {
    const std::string key = row.scenario + "|" + row.c_s + "|" + row.c_r + "|" + fmt(row.ratio) +
                            "|" + row.method;
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      groups.emplace_back();
      SummaryRow s;
      s.scenario = row.scenario;
      s.c_s = row.c_s;
      s.c_r = row.c_r;
      s.ratio = row.ratio;
      s.method = row.method;
      out.push_back(std::move(s));
    }
    groups[it->second].push_back(&row);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    SummaryRow& s = out[g];
    s.trials = static_cast<int>(groups[g].size());
    std::vector<double> psnrs, rels;
    for (const ResultRow* row : groups[g]) {
      if (std::isinf(row->psnr_db)) {
        ++s.n_exact;
      } else if (std::isfinite(row->psnr_db)) {
        psnrs.push_back(row->psnr_db);
      }
      rels.push_back(row->rel_error);
    }
    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
      if (v.empty()) {
        mean = std::numeric_limits<double>::quiet_NaN();
        se = 0.0;
        return;
      }
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      se = v.size() > 1
               ? std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))
               : 0.0;
    };
    mean_se(psnrs, s.mean_psnr_db, s.se_psnr_db);
    if (psnrs.empty() && s.n_exact > 0) s.mean_psnr_db = std::numeric_limits<double>::infinity();
    s.ci95_psnr_db = 1.96 * s.se_psnr_db;
    mean_se(rels, s.mean_rel_error, s.se_rel_error);
    s.ci95_rel_error = 1.96 * s.se_rel_error;
  }
  return out;
}

void rows_to_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "scenario,c_s,c_r,ratio,trial,seed,psnr_db,rel_error,residual,steps,method,peak,"
         "config_hash\n";
  for (const ResultRow& row : rows) {
    out << row.scenario << ',' << row.c_s << ',' << row.c_r << ',' << fmt(row.ratio) << ','
        << row.trial << ',' << row.seed << ',' << fmt(row.psnr_db) << ',' << fmt(row.rel_error)
        << ',' << fmt(row.residual) << ',' << row.steps << ',' << row.method << ','
        << fmt(row.peak) << ',' << row.config_hash << '\n';
  }
}

void timings_to_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "scenario,c_s,c_r,ratio,trial,seed,method,wall_time\n";
  for (const ResultRow& row : rows) {
    out << row.scenario << ',' << row.c_s << ',' << row.c_r << ',' << fmt(row.ratio) << ','
        << row.trial << ',' << row.seed << ',' << row.method << ',' << fmt(row.wall_time) << '\n';
  }
}

void summary_to_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "scenario,c_s,c_r,ratio,method,trials,mean_psnr_db,se_psnr_db,ci95_psnr_db,"
         "mean_rel_error,se_rel_error,ci95_rel_error,n_exact\n";
  for (const SummaryRow& s : rows) {
    out << s.scenario << ',' << s.c_s << ',' << s.c_r << ',' << fmt(s.ratio) << ',' << s.method
        << ',' << s.trials << ',' << fmt(s.mean_psnr_db) << ',' << fmt(s.se_psnr_db) << ','
        << fmt(s.ci95_psnr_db) << ',' << fmt(s.mean_rel_error) << ',' << fmt(s.se_rel_error)
        << ',' << fmt(s.ci95_rel_error) << ',' << s.n_exact << '\n';
  }
}

void lambda_to_csv(const LambdaGrid& grid, std::ostream& out) {
  out << "sampling\\recovery";
  for (const ConditionId& c : grid.prompts) out << ',' << c;
  out << '\n';
  for (Eigen::Index s = 0; s < grid.lambda.rows(); ++s) {
    out << grid.prompts[static_cast<std::size_t>(s)];
    for (Eigen::Index r = 0; r < grid.lambda.cols(); ++r) {
      const bool bad = grid.degenerate[static_cast<std::size_t>(s)] ||
                       grid.degenerate[static_cast<std::size_t>(r)];
      out << ',' << (bad ? std::string("degenerate") : fmt(grid.lambda(s, r)));
    }
    out << '\n';
  }
}

namespace {

Eigen::VectorXd column_from_csv(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInputError(std::string(what) + ": missing header");
  std::vector<std::pair<long, double>> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long idx = 0;
    double val = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%lf", &idx, &val) != 2)
      throw InvalidInputError(std::string(what) + ": malformed row '" + line + "'");
    entries.emplace_back(idx, val);
  }
  if (entries.empty()) throw InvalidInputError(std::string(what) + ": no rows");
  Eigen::VectorXd v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(entries.size()),
                                                std::numeric_limits<double>::quiet_NaN());
  for (const auto& [idx, val] : entries) {
    if (idx < 0 || idx >= v.size() || !std::isnan(v(idx)))
      throw InvalidInputError(std::string(what) + ": bad or duplicate index " +
                              std::to_string(idx));
    v(idx) = val;
  }
  return v;
}

}  // namespace

Eigen::VectorXd law_probs_from_csv(std::istream& in) { return column_from_csv(in, "law csv"); }

Eigen::VectorXd christoffel_values_from_csv(std::istream& in) {
  return column_from_csv(in, "christoffel csv");
}

std::string run_experiment_to_dir(const ExperimentConfig& config, const std::string& out_parent) {
  validate(config);
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::path(out_parent.empty() ? "results" : out_parent) / ("run-" + config_hash(config));
  fs::create_directories(dir / "laws");

  {
    std::ofstream out(dir / "config.json");
    out << to_json(config) << '\n';
  }

  LambdaGrid grid = run_lambda_grid(config);
  for (std::size_t i = 0; i < grid.prompts.size(); ++i) {
    if (grid.degenerate[i]) continue;
    const ConditionId& c = grid.prompts[i];
    {
      std::ofstream out(dir / "laws" / ("christoffel_" + c + ".csv"));
      to_csv(grid.estimates.at(c), out);
    }
    {
      std::ofstream out(dir / "laws" / ("law_" + c + ".csv"));
      to_csv(grid.laws.at(c), out);
    }
  }
  if (config.kind == ExperimentConfig::Kind::lambda_grid) {
    std::ofstream out(dir / "lambda.csv");
    lambda_to_csv(grid, out);
    return dir.string();
  }

  std::vector<ResultRow> rows = run_reconstruction_grid(config);
  {
    std::ofstream out(dir / "rows.csv");
    rows_to_csv(rows, out);
  }
  {
    std::ofstream out(dir / "timings.csv");
    timings_to_csv(rows, out);
  }
  {
    std::ofstream out(dir / "summary.csv");
    summary_to_csv(summarize(rows), out);
  }
  return dir.string();
}

}  // namespace gcs
