// SPDX-License-Identifier: Apache-2.0
#include "pgda/grf.hpp"

#include <cmath>
#include <sstream>

#include "pgda/error.hpp"
#include "pgda/rng.hpp"

namespace pgda {

void GrfConfig::validate() const {
  grid.validate();
  if (!(length_scale > 0.0)) throw ParameterError("GRF length scale must be positive");
  if (!(jitter >= 0.0)) throw ParameterError("GRF jitter must be non-negative");
  if (!std::isfinite(mean)) throw ParameterError("GRF mean must be finite");
}

Tensor kernel_matrix(std::span<const std::array<double, 2>> points, double length_scale) {
  if (!(length_scale > 0.0)) throw ParameterError("kernel length scale must be positive");
  const std::size_t n = points.size();
  if (n == 0) throw DimensionError("kernel_matrix needs at least one point");
  Tensor k({n, n});
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  for (std::size_t i = 0; i < n; ++i) {
    k.at(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double dx = points[i][0] - points[j][0];
      const double dy = points[i][1] - points[j][1];
      const double v = std::exp(-(dx * dx + dy * dy) * inv);
      k.at(i, j) = v;
      k.at(j, i) = v;
    }
  }
  return k;
}

namespace {

bool try_factor(const Tensor& k, double jitter, Tensor& lower) {
  const std::size_t n = k.dim(0);
  lower = Tensor({n, n}, 0.0);
  double* L = lower.data().data();
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = L + j * n;
    double d = k.at(j, j) + jitter;
    for (std::size_t p = 0; p < j; ++p) d -= lj[p] * lj[p];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double pivot = std::sqrt(d);
    L[j * n + j] = pivot;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double* li = L + i * n;
      double s = k.at(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= li[p] * lj[p];
      L[i * n + j] = s / pivot;
    }
  }
  return true;
}

}  // namespace

CholeskyResult cholesky(const Tensor& k, double jitter) {
  if (k.rank() != 2 || k.dim(0) != k.dim(1))
    throw DimensionError("cholesky needs a square matrix, got " + shape_string(k.shape()));
  if (!(jitter >= 0.0)) throw ParameterError("cholesky jitter must be non-negative");
  CholeskyResult result;
  double j = jitter;
  while (true) {
    if (try_factor(k, j, result.lower)) {
      result.jitter = j;
      return result;
    }
    const double next = j == 0.0 ? 1e-10 : j * 10.0;
    if (next > kMaxJitter * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "matrix is not positive definite even with jitter " << j;
      throw NumericalError(os.str());
    }
    j = next;
  }
}

GrfSampler::GrfSampler(const GrfConfig& config) : config_(config) {
  config_.validate();
  const auto pts = config_.grid.points();
  factor_ = cholesky(kernel_matrix(pts, config_.length_scale), config_.jitter);
}

GridFunction GrfSampler::sample(std::uint64_t seed) const {
  const std::size_t n = config_.grid.point_count();
  Rng rng(seed);
  std::vector<double> z(n);
  for (auto& v : z) v = rng.normal();
  GridFunction out = GridFunction::constant(config_.grid, config_.mean);
  const double* L = factor_.lower.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p <= i; ++p) s += L[i * n + p] * z[p];
    out[i] += s;
  }
  return out;
}

GridFunction sample(const GrfConfig& config, std::uint64_t seed) { return GrfSampler(config).sample(seed); }

}  // namespace pgda
