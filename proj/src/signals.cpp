#include "gcs/signals.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "gcs/errors.hpp"

namespace gcs {

namespace {

void check_shape(Eigen::Index size, int channels, Eigen::Index n, const char* what) {
  if (channels <= 0 || n <= 0)
    throw InvalidInputError(std::string(what) + ": channels and per_channel_len must be positive");
  if (size != static_cast<Eigen::Index>(channels) * n)
    throw InvalidInputError(std::string(what) + ": data length does not equal channels * per_channel_len");
}

}  // namespace

void validate(const Signal& s) {
  check_shape(s.data.size(), s.channels, s.per_channel_len, "Signal");
  if (!s.data.allFinite()) throw InvalidInputError("Signal: non-finite entry");
}

void validate(const Spectrum& sp) {
  check_shape(sp.coeffs.size(), sp.channels, sp.per_channel_len, "Spectrum");
  if (!sp.coeffs.allFinite()) throw InvalidInputError("Spectrum: non-finite entry");
}

Signal make_signal(Eigen::VectorXcd data, int channels) {
  if (channels <= 0) throw InvalidInputError("make_signal: channels must be positive");
  if (data.size() % channels != 0)
    throw InvalidInputError("make_signal: data length not divisible by channels");
  Signal s{std::move(data), channels, 0};
  s.per_channel_len = s.data.size() / channels;
  validate(s);
  return s;
}

Signal zero_signal(int channels, Eigen::Index per_channel_len) {
  if (channels <= 0 || per_channel_len <= 0)
    throw InvalidInputError("zero_signal: channels and per_channel_len must be positive");
  return Signal{Eigen::VectorXcd::Zero(channels * per_channel_len), channels, per_channel_len};
}

Spectrum dft(const Signal& s) {
  validate(s);
  const Eigen::Index n = s.per_channel_len;
  if (n == 1) return Spectrum{s.data, s.channels, n};
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Spectrum sp{Eigen::VectorXcd(s.data.size()), s.channels, n};
  Eigen::FFT<double> fft;
  Eigen::VectorXcd in(n), out(n);
  for (int ch = 0; ch < s.channels; ++ch) {
    in = s.data.segment(ch * n, n);
    fft.fwd(out, in);
    sp.coeffs.segment(ch * n, n) = out * scale;
  }
  return sp;
}

Signal idft(const Spectrum& sp) {
  validate(sp);
  const Eigen::Index n = sp.per_channel_len;
  if (n == 1) return Signal{sp.coeffs, sp.channels, n};
  const double scale = std::sqrt(static_cast<double>(n));
  Signal s{Eigen::VectorXcd(sp.coeffs.size()), sp.channels, n};
  Eigen::FFT<double> fft;
  Eigen::VectorXcd in(n), out(n);
  for (int ch = 0; ch < sp.channels; ++ch) {
    in = sp.coeffs.segment(ch * n, n);
    fft.inv(out, in);
    s.data.segment(ch * n, n) = out * scale;
  }
  return s;
}

Eigen::VectorXcd sample_coefficient(const Signal& s, Eigen::Index freq) {
  validate(s);
  if (freq < 0 || freq >= s.per_channel_len)
    throw InvalidInputError("sample_coefficient: frequency index out of range");
  const Spectrum sp = dft(s);
  Eigen::VectorXcd block(s.channels);
  for (int ch = 0; ch < s.channels; ++ch)
    block(ch) = sp.coeffs(ch * s.per_channel_len + freq);
  return block;
}

double block_energy(const Spectrum& sp, Eigen::Index freq) {
  if (freq < 0 || freq >= sp.per_channel_len)
    throw InvalidInputError("block_energy: frequency index out of range");
  double e = 0.0;
  for (int ch = 0; ch < sp.channels; ++ch)
    e += std::norm(sp.coeffs(ch * sp.per_channel_len + freq));
  return e;
}

double psnr(const Signal& reference, const Signal& estimate, double peak) {
  validate(reference);
  validate(estimate);
  if (reference.channels != estimate.channels ||
      reference.per_channel_len != estimate.per_channel_len)
    throw InvalidInputError("psnr: shape mismatch");
  if (!(peak > 0.0)) throw InvalidInputError("psnr: peak must be positive");
  const double mse =
      (reference.data - estimate.data).squaredNorm() / static_cast<double>(reference.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double relative_error(const Signal& reference, const Signal& estimate) {
  validate(reference);
  validate(estimate);
  if (reference.channels != estimate.channels ||
      reference.per_channel_len != estimate.per_channel_len)
    throw InvalidInputError("relative_error: shape mismatch");
  const double denom = reference.data.norm();
  if (denom == 0.0) throw InvalidInputError("relative_error: zero reference");
  return (estimate.data - reference.data).norm() / denom;
}

void to_csv(const Signal& s, std::ostream& out) {
  validate(s);
  out << "channel,index,re,im\n";
  char buf[128];
  for (int ch = 0; ch < s.channels; ++ch) {
    for (Eigen::Index j = 0; j < s.per_channel_len; ++j) {
      const auto v = s.data(ch * s.per_channel_len + j);
      std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g\n", ch,
                    static_cast<long long>(j), v.real(), v.imag());
      out << buf;
    }
  }
}

Signal signal_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("signal_from_csv: empty input");
  std::map<std::pair<int, long long>, std::complex<double>> entries;
  int max_ch = -1;
  long long max_idx = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
        !std::getline(row, f2, ',') || !std::getline(row, f3, ','))
      throw InvalidInputError("signal_from_csv: malformed row: " + line);
    int ch;
    long long idx;
    double re, im;
    try {
      ch = std::stoi(f0);
      idx = std::stoll(f1);
      re = std::stod(f2);
      im = std::stod(f3);
    } catch (const std::exception&) {
      throw InvalidInputError("signal_from_csv: malformed row: " + line);
    }
    if (ch < 0 || idx < 0) throw InvalidInputError("signal_from_csv: negative channel or index");
    if (!entries.emplace(std::make_pair(ch, idx), std::complex<double>(re, im)).second)
      throw InvalidInputError("signal_from_csv: duplicate entry");
    max_ch = std::max(max_ch, ch);
    max_idx = std::max(max_idx, idx);
  }
  if (entries.empty()) throw InvalidInputError("signal_from_csv: no data rows");
  const int channels = max_ch + 1;
  const Eigen::Index n = max_idx + 1;
  if (static_cast<Eigen::Index>(entries.size()) != channels * n)
    throw InvalidInputError("signal_from_csv: missing entries");
  Signal s{Eigen::VectorXcd(channels * n), channels, n};
  for (const auto& [key, value] : entries) s.data(key.first * n + key.second) = value;
  validate(s);
  return s;
}

}  // namespace gcs
