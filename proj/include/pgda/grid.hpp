// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "pgda/tensor.hpp"

namespace pgda {

/// Equispaced grid on [0,1]^dims with endpoints: x_i = i / (n - 1).
struct GridSpec {
  int dims = 1;
  std::size_t n = 32;

  void validate() const;
  std::size_t point_count() const { return dims == 1 ? n : n * n; }
  double spacing() const { return 1.0 / static_cast<double>(n - 1); }
  double coord(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n - 1); }
  /// Shape of a value tensor on this grid: [n] or [n, n].
  Shape value_shape() const;
  /// All points in row-major order; unused second coordinate is 0 in 1D.
  std::vector<std::array<double, 2>> points() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Real function sampled on a GridSpec. 2D values are indexed [ix][iy].
struct GridFunction {
  GridSpec grid;
  Tensor values;

  static GridFunction zeros(const GridSpec& grid);
  static GridFunction constant(const GridSpec& grid, double c);
  static GridFunction from(const GridSpec& grid, const std::function<double(double)>& f);
  static GridFunction from(const GridSpec& grid, const std::function<double(double, double)>& f);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  friend bool operator==(const GridFunction&, const GridFunction&) = default;
};

/// c1 * a + c2 * b on a shared grid.
GridFunction axpby(double c1, const GridFunction& a, double c2, const GridFunction& b);

double max_abs_diff(const GridFunction& a, const GridFunction& b);

}  // namespace pgda
