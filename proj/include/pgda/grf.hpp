// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "pgda/grid.hpp"

namespace pgda {

/// Gaussian random field with constant mean and RBF covariance
/// k(x1, x2) = exp(-|x1 - x2|^2 / (2 l^2)), isotropic in 2D.
struct GrfConfig {
  double mean = 0.0;
  double length_scale = 0.2;
  GridSpec grid{};
  double jitter = 1e-10;

  void validate() const;
  friend bool operator==(const GrfConfig&, const GrfConfig&) = default;
};

Tensor kernel_matrix(std::span<const std::array<double, 2>> points, double length_scale);

struct CholeskyResult {
  Tensor lower;
  double jitter = 0.0;  ///< diagonal shift that succeeded
};

/// Largest diagonal shift tried before giving up.
inline constexpr double kMaxJitter = 1e-4;

/// Lower factor of K + jitter I. On a non-positive pivot the jitter is
/// multiplied by 10 (starting from 1e-10 when zero) until kMaxJitter.
CholeskyResult cholesky(const Tensor& k, double jitter);

/// Reusable sampler: factors the covariance once.
class GrfSampler {
 public:
  explicit GrfSampler(const GrfConfig& config);

  const GrfConfig& config() const { return config_; }
  double jitter_used() const { return factor_.jitter; }
  /// mean + L z with z ~ N(0, I) drawn from Rng(seed).
  GridFunction sample(std::uint64_t seed) const;

 private:
  GrfConfig config_;
  CholeskyResult factor_;
};

GridFunction sample(const GrfConfig& config, std::uint64_t seed);

}  // namespace pgda
