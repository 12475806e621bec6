// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pgda/dataset.hpp"

namespace pgda {

/// (c1 v_i + c2 v_j, c1 u_i + c2 u_j). Valid for any linear solution operator.
SamplePair linear_combine(const SamplePair& pi, const SamplePair& pj, double c1, double c2);

/// (v + 1, u + u0) where base = (1, u0) is the constant-input pair.
SamplePair translate(const SamplePair& p, const SamplePair& base);

/// (c0 + c1 v_i + c2 v_j, c0 u0 + c1 u_i + c2 u_j).
SamplePair combined(const SamplePair& pi, const SamplePair& pj, const SamplePair& base, double c0, double c1,
                    double c2);

/// (c0 a, u / c0) for -div(a grad u) = f; c0 must be nonzero.
SamplePair darcy_scale(const SamplePair& p, double c0);

/// Appends multiplier * N augmented pairs to a copy of `d`.
///
/// Draw t uses Rng(derive_seed(cfg.seed, seed_tag::augment, t)) and consumes,
/// in order: i, j (uniform indices), c0, c1, c2. Linear mode sets c0 = 0;
/// Translate sets c0 = c1 = 1 and c2 = 0. Mode None returns `d` unchanged.
/// No solver is invoked.
Dataset augment_dataset(const Dataset& d, const SamplePair& base, const AugmentConfig& cfg);

}  // namespace pgda
