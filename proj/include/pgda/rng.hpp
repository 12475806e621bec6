// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace pgda {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for stream `index` of `master`:
/// mix64(mix64(master) ^ (index + 0x9e3779b97f4a7c15 * (tag + 1))).
/// Children are independent of generation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0);

/// Stream tags used with derive_seed.
namespace seed_tag {
inline constexpr std::uint64_t train_data = 1;
inline constexpr std::uint64_t test_data = 2;
inline constexpr std::uint64_t augment = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t shuffle = 5;
inline constexpr std::uint64_t sample = 6;
}  // namespace seed_tag

/// Reproducible generator: std::mt19937_64 (bit-exact by the standard) with
/// distribution code written here so results do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection sampling.
  std::uint64_t index(std::uint64_t n);
  /// Standard normal via the Box-Muller transform (pairs are cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pgda
