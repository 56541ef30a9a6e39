#include "gcs/rng.hpp"

#include <cmath>
#include <numbers>

#include "gcs/errors.hpp"

namespace gcs {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Rng::philox4x32(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    philox_round(counter, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

Rng::Rng(std::uint64_t seed) {
  key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  stream_ = {0u, 0u};
}

void Rng::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      stream_[0], stream_[1]};
  buffer_ = philox4x32(ctr, key_);
  ++block_;
  pos_ = 0;
}

std::uint32_t Rng::next_u32() {
  if (pos_ == 4) refill();
  return buffer_[pos_++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw InvalidInputError("uniform: requires lo < hi");
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  have_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::categorical(const std::vector<double>& weights) {
  if (weights.empty()) throw InvalidInputError("categorical: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidInputError("categorical: negative or NaN weight");
    total += w;
  }
  if (total <= 0.0) throw InvalidInputError("categorical: all weights zero");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;  // u landed on accumulated rounding slack
}

Rng Rng::derive(std::uint64_t purpose) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32),
      stream_[0] ^ kWeyl0, stream_[1] ^ kWeyl1};
  const auto out = philox4x32(ctr, key_);
  Rng child;
  child.key_ = {out[0], out[1]};
  child.stream_ = {out[2], out[3]};
  return child;
}

}  // namespace gcs
