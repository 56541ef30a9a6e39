#include "gcs/measurement.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "gcs/errors.hpp"
#include "gcs/rng.hpp"

namespace gcs {

namespace {

void format_double(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void validate(const MeasurementPlan& plan) {
  if (plan.m <= 0) throw InvalidInputError("measurement plan needs m >= 1");
  if (plan.channels <= 0) throw InvalidInputError("measurement plan needs channels >= 1");
  if (plan.per_channel_len <= 0) throw InvalidInputError("measurement plan needs a signal length");
  if (static_cast<Eigen::Index>(plan.indices.size()) != plan.m)
    throw InvalidInputError("measurement plan index count differs from m");
  if (plan.weights.size() != plan.m)
    throw InvalidInputError("measurement plan weight count differs from m");
  for (Eigen::Index idx : plan.indices) {
    if (idx < 0 || idx >= plan.per_channel_len)
      throw InvalidInputError("measurement plan index out of range");
  }
  for (Eigen::Index j = 0; j < plan.m; ++j) {
    double w = plan.weights(j);
    if (!std::isfinite(w) || w <= 0.0)
      throw InvalidInputError("measurement plan weights must be finite and positive");
    if (plan.mode == MeasurementPlan::Mode::unweighted && w != 1.0)
      throw InvalidInputError("unweighted plans must carry unit weights");
  }
  if (plan.draw_mode == MeasurementPlan::DrawMode::without_replacement_dc) {
    bool has_dc = false;
    std::vector<bool> seen(static_cast<std::size_t>(plan.per_channel_len), false);
    for (Eigen::Index idx : plan.indices) {
      if (seen[static_cast<std::size_t>(idx)])
        throw InvalidInputError("without-replacement plan repeats an index");
      seen[static_cast<std::size_t>(idx)] = true;
      if (idx == 0) has_dc = true;
    }
    if (!has_dc) throw InvalidInputError("without-replacement plan must include frequency 0");
  }
}

MeasurementPlan draw_plan(const SamplingLaw& law, Eigen::Index m,
                          MeasurementPlan::DrawMode draw_mode, MeasurementPlan::Mode mode,
                          int channels, std::uint64_t seed) {
  const Eigen::Index n = law.probs.size();
  if (n <= 0) throw InvalidInputError("draw_plan: empty sampling law");
  if (m <= 0) throw InvalidInputError("draw_plan: m must be >= 1");
  if (channels <= 0) throw InvalidInputError("draw_plan: channels must be >= 1");

  const bool iid = draw_mode == MeasurementPlan::DrawMode::iid_with_replacement;
  if (iid && mode != MeasurementPlan::Mode::weighted)
    throw ModeConflictError("iid draws pair with weighted measurements");
  if (!iid && mode != MeasurementPlan::Mode::unweighted)
    throw ModeConflictError("without-replacement draws pair with unweighted measurements");

  MeasurementPlan plan;
  plan.mode = mode;
  plan.draw_mode = draw_mode;
  plan.m = m;
  plan.channels = channels;
  plan.per_channel_len = n;
  plan.seed = seed;
  plan.indices.reserve(static_cast<std::size_t>(m));
  plan.weights = Eigen::VectorXd::Ones(m);

  Rng rng(seed);
  std::vector<double> probs(law.probs.data(), law.probs.data() + n);
  if (iid) {
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::Index idx = static_cast<Eigen::Index>(rng.categorical(probs));
      plan.indices.push_back(idx);
      plan.weights(j) = 1.0 / law.probs(idx);
    }
  } else {
    if (m > n) throw InvalidInputError("draw_plan: cannot draw more distinct frequencies than exist");
    plan.indices.push_back(0);
    probs[0] = 0.0;
    for (Eigen::Index j = 1; j < m; ++j) {
      Eigen::Index idx = static_cast<Eigen::Index>(rng.categorical(probs));
      plan.indices.push_back(idx);
      probs[static_cast<std::size_t>(idx)] = 0.0;
    }
  }
  validate(plan);
  return plan;
}

Measurements apply(const MeasurementPlan& plan, const Signal& f) {
  validate(plan);
  validate(f);
  if (f.channels != plan.channels || f.per_channel_len != plan.per_channel_len)
    throw InvalidInputError("apply: signal shape differs from measurement plan");

  const Eigen::Index m = plan.m;
  const Eigen::Index n = plan.per_channel_len;
  const int C = plan.channels;
  const double root_m = std::sqrt(static_cast<double>(m));
  Spectrum hat = dft(f);

  Measurements meas;
  meas.y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(C) * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = std::sqrt(plan.weights(j)) / root_m;
    const Eigen::Index idx = plan.indices[static_cast<std::size_t>(j)];
    for (int ch = 0; ch < C; ++ch)
      meas.y(static_cast<Eigen::Index>(ch) * m + j) = a * hat.coeffs(static_cast<Eigen::Index>(ch) * n + idx);
  }
  return meas;
}

Signal adjoint(const MeasurementPlan& plan, const Measurements& meas) {
  validate(plan);
  const Eigen::Index m = plan.m;
  const Eigen::Index n = plan.per_channel_len;
  const int C = plan.channels;
  if (meas.y.size() != static_cast<Eigen::Index>(C) * m)
    throw InvalidInputError("adjoint: measurement length differs from plan");
  const double root_m = std::sqrt(static_cast<double>(m));

  Spectrum hat;
  hat.coeffs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(C) * n);
  hat.channels = C;
  hat.per_channel_len = n;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = std::sqrt(plan.weights(j)) / root_m;
    const Eigen::Index idx = plan.indices[static_cast<std::size_t>(j)];
    for (int ch = 0; ch < C; ++ch)
      hat.coeffs(static_cast<Eigen::Index>(ch) * n + idx) += a * meas.y(static_cast<Eigen::Index>(ch) * m + j);
  }
  return idft(hat);
}

Measurements add_noise(const MeasurementPlan& plan, const Measurements& meas,
                       const Eigen::VectorXcd& u, bool weighted) {
  validate(plan);
  const Eigen::Index total = static_cast<Eigen::Index>(plan.channels) * plan.m;
  if (meas.y.size() != total) throw InvalidInputError("add_noise: measurement length differs from plan");
  if (u.size() != total) throw InvalidInputError("add_noise: noise vector length differs from plan");
  if (!u.allFinite()) throw InvalidInputError("add_noise: noise vector must be finite");
  if (weighted && plan.mode != MeasurementPlan::Mode::weighted)
    throw ModeConflictError("weighted noise scaling needs a weighted plan");

  const double root_m = std::sqrt(static_cast<double>(plan.m));
  Measurements out;
  out.unweighted_noise = u;
  out.noise = Eigen::VectorXcd::Zero(total);
  for (Eigen::Index j = 0; j < plan.m; ++j) {
    const double a = (weighted ? std::sqrt(plan.weights(j)) : 1.0) / root_m;
    for (int ch = 0; ch < plan.channels; ++ch) {
      Eigen::Index k = static_cast<Eigen::Index>(ch) * plan.m + j;
      out.noise(k) = a * u(k);
    }
  }
  out.y = meas.y + out.noise;
  out.noise_norm = out.noise.norm();
  return out;
}

Measurements add_noise(const MeasurementPlan& plan, const Measurements& meas, double scale,
                       bool weighted, std::uint64_t seed) {
  if (!(scale >= 0.0) || !std::isfinite(scale))
    throw InvalidInputError("add_noise: scale must be finite and nonnegative");
  const Eigen::Index total = static_cast<Eigen::Index>(plan.channels) * plan.m;
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(total);
  if (scale > 0.0) {
    Rng rng(seed);
    const double s = scale / std::sqrt(2.0);
    for (Eigen::Index k = 0; k < total; ++k)
      u(k) = std::complex<double>(s * rng.normal(), s * rng.normal());
  }
  return add_noise(plan, meas, u, weighted);
}

Signal zero_filled(const MeasurementPlan& plan, const Measurements& meas) {
  Signal s = adjoint(plan, meas);
  s.data *= static_cast<double>(plan.m) / static_cast<double>(plan.per_channel_len);
  return s;
}

std::string to_json(const MeasurementPlan& plan) {
  nlohmann::json j;
  j["indices"] = nlohmann::json::array();
  for (Eigen::Index idx : plan.indices) j["indices"].push_back(idx);
  j["weights"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < plan.weights.size(); ++k) j["weights"].push_back(plan.weights(k));
  j["mode"] = plan.mode == MeasurementPlan::Mode::weighted ? "weighted" : "unweighted";
  j["draw_mode"] = plan.draw_mode == MeasurementPlan::DrawMode::iid_with_replacement
                       ? "iid_with_replacement"
                       : "without_replacement_dc";
  j["m"] = plan.m;
  j["channels"] = plan.channels;
  j["per_channel_len"] = plan.per_channel_len;
  j["seed"] = plan.seed;
  return j.dump(2);
}

MeasurementPlan plan_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("plan_from_json: ") + e.what());
  }
  MeasurementPlan plan;
  try {
    for (const auto& v : j.at("indices")) plan.indices.push_back(v.get<Eigen::Index>());
    const auto& w = j.at("weights");
    plan.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (Eigen::Index k = 0; k < plan.weights.size(); ++k)
      plan.weights(k) = w[static_cast<std::size_t>(k)].get<double>();
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "weighted")
      plan.mode = MeasurementPlan::Mode::weighted;
    else if (mode == "unweighted")
      plan.mode = MeasurementPlan::Mode::unweighted;
    else
      throw InvalidInputError("plan_from_json: unknown mode " + mode);
    std::string draw = j.at("draw_mode").get<std::string>();
    if (draw == "iid_with_replacement")
      plan.draw_mode = MeasurementPlan::DrawMode::iid_with_replacement;
    else if (draw == "without_replacement_dc")
      plan.draw_mode = MeasurementPlan::DrawMode::without_replacement_dc;
    else
      throw InvalidInputError("plan_from_json: unknown draw mode " + draw);
    plan.m = j.at("m").get<Eigen::Index>();
    plan.channels = j.at("channels").get<int>();
    plan.per_channel_len = j.at("per_channel_len").get<Eigen::Index>();
    plan.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("plan_from_json: ") + e.what());
  }
  validate(plan);
  return plan;
}

void to_csv(const Measurements& meas, int channels, std::ostream& out) {
  if (channels <= 0 || meas.y.size() % channels != 0)
    throw InvalidInputError("measurements to_csv: channel count does not divide length");
  const Eigen::Index m = meas.y.size() / channels;
  std::string text = "j,channel,re,im\n";
  for (int ch = 0; ch < channels; ++ch) {
    for (Eigen::Index j = 0; j < m; ++j) {
      text += std::to_string(j);
      text += ',';
      text += std::to_string(ch);
      text += ',';
      format_double(text, meas.y(static_cast<Eigen::Index>(ch) * m + j).real());
      text += ',';
      format_double(text, meas.y(static_cast<Eigen::Index>(ch) * m + j).imag());
      text += '\n';
    }
  }
  out << text;
}

Measurements measurements_from_csv(std::istream& in, int* channels_out) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("measurements csv: empty input");
  std::map<std::pair<int, Eigen::Index>, std::complex<double>> entries;
  Eigen::Index max_j = -1;
  int max_ch = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
        !std::getline(row, f2, ',') || !std::getline(row, f3))
      throw InvalidInputError("measurements csv: malformed row: " + line);
    Eigen::Index j = 0;
    int ch = 0;
    double re = 0.0, im = 0.0;
    try {
      j = static_cast<Eigen::Index>(std::stoll(f0));
      ch = std::stoi(f1);
      re = std::stod(f2);
      im = std::stod(f3);
    } catch (const std::exception&) {
      throw InvalidInputError("measurements csv: malformed row: " + line);
    }
    if (j < 0 || ch < 0) throw InvalidInputError("measurements csv: negative index");
    if (!entries.emplace(std::make_pair(ch, j), std::complex<double>(re, im)).second)
      throw InvalidInputError("measurements csv: duplicate entry");
    max_j = std::max(max_j, j);
    max_ch = std::max(max_ch, ch);
  }
  if (max_j < 0) throw InvalidInputError("measurements csv: no rows");
  const Eigen::Index m = max_j + 1;
  const int C = max_ch + 1;
  Measurements meas;
  meas.y.resize(static_cast<Eigen::Index>(C) * m);
  for (int ch = 0; ch < C; ++ch) {
    for (Eigen::Index j = 0; j < m; ++j) {
      auto it = entries.find(std::make_pair(ch, j));
      if (it == entries.end()) throw InvalidInputError("measurements csv: missing entry");
      meas.y(static_cast<Eigen::Index>(ch) * m + j) = it->second;
    }
  }
  if (channels_out) *channels_out = C;
  return meas;
}

}  // namespace gcs
