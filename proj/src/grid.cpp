// SPDX-License-Identifier: Apache-2.0
#include "pgda/grid.hpp"

#include <algorithm>
#include <cmath>

#include "pgda/error.hpp"

namespace pgda {

void GridSpec::validate() const {
  if (dims != 1 && dims != 2) throw ParameterError("grid dims must be 1 or 2, got " + std::to_string(dims));
  if (n < 2) throw ParameterError("grid needs at least 2 points per axis, got " + std::to_string(n));
}

Shape GridSpec::value_shape() const { return dims == 1 ? Shape{n} : Shape{n, n}; }

std::vector<std::array<double, 2>> GridSpec::points() const {
  std::vector<std::array<double, 2>> pts;
  pts.reserve(point_count());
  if (dims == 1) {
    for (std::size_t i = 0; i < n; ++i) pts.push_back({coord(i), 0.0});
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pts.push_back({coord(i), coord(j)});
  }
  return pts;
}

GridFunction GridFunction::zeros(const GridSpec& grid) { return constant(grid, 0.0); }

GridFunction GridFunction::constant(const GridSpec& grid, double c) {
  grid.validate();
  return GridFunction{grid, Tensor(grid.value_shape(), c)};
}

GridFunction GridFunction::from(const GridSpec& grid, const std::function<double(double)>& f) {
  if (grid.dims != 1) throw DimensionError("one-argument function needs a 1D grid");
  GridFunction out = zeros(grid);
  for (std::size_t i = 0; i < grid.n; ++i) out[i] = f(grid.coord(i));
  return out;
}

GridFunction GridFunction::from(const GridSpec& grid, const std::function<double(double, double)>& f) {
  if (grid.dims != 2) throw DimensionError("two-argument function needs a 2D grid");
  GridFunction out = zeros(grid);
  for (std::size_t i = 0; i < grid.n; ++i)
    for (std::size_t j = 0; j < grid.n; ++j) out[i * grid.n + j] = f(grid.coord(i), grid.coord(j));
  return out;
}

GridFunction axpby(double c1, const GridFunction& a, double c2, const GridFunction& b) {
  if (!(a.grid == b.grid)) throw DimensionError("grid functions live on different grids");
  GridFunction out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c1 * a[i] + c2 * b[i];
  return out;
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw DimensionError("grid functions differ in size");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace pgda
