#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace gcs {

/// Counter-based pseudorandom generator (Philox 4x32, 10 rounds).
///
/// Every draw is a pure function of (key, stream, block counter), so runs are
/// reproducible across platforms and independent child streams can be split
/// off with derive() without coordinating state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (second value cached).
  double normal();
  /// Index draw from an unnormalized nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& weights);

  /// Child generator keyed by (parent identity, purpose). Independent of how
  /// many values the parent has produced.
  Rng derive(std::uint64_t purpose) const;

  /// One keyed block cipher application; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox4x32(
      std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

 private:
  Rng() = default;

  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 2> stream_{};
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace gcs
