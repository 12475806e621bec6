// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "pgda/tape.hpp"

namespace pgda {

struct GradCheckOptions {
  double step = 1e-6;
  /// Denominator floor: error_i = |g - d| / max(|g|, |d|, floor).
  double floor = 1e-3;
};

/// Compares tape gradients of a scalar function with central differences
/// (f(theta + h e_i) - f(theta - h e_i)) / 2h, coordinate by coordinate.
/// Returns the largest relative error.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& theta, GradCheckOptions opts = {});

}  // namespace pgda
