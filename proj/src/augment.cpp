// SPDX-License-Identifier: Apache-2.0
#include "pgda/augment.hpp"

#include <cmath>

#include "pgda/error.hpp"
#include "pgda/rng.hpp"

namespace pgda {

namespace {

void require_same_grid(const SamplePair& a, const SamplePair& b) {
  if (!(a.input.grid == b.input.grid) || !(a.output.grid == b.output.grid) || a.input.size() != b.input.size() ||
      a.output.size() != b.output.size())
    throw DimensionError("sample pairs live on different grids");
}

void require_unit_base(const SamplePair& base) {
  for (std::size_t i = 0; i < base.input.size(); ++i)
    if (std::abs(base.input[i] - 1.0) > 1e-12)
      throw ContractError("translation base input must be identically 1");
}

}  // namespace

SamplePair linear_combine(const SamplePair& pi, const SamplePair& pj, double c1, double c2) {
  require_same_grid(pi, pj);
  return SamplePair{axpby(c1, pi.input, c2, pj.input), axpby(c1, pi.output, c2, pj.output)};
}

SamplePair translate(const SamplePair& p, const SamplePair& base) {
  require_same_grid(p, base);
  require_unit_base(base);
  return linear_combine(p, base, 1.0, 1.0);
}

SamplePair combined(const SamplePair& pi, const SamplePair& pj, const SamplePair& base, double c0, double c1,
                    double c2) {
  require_same_grid(pi, pj);
  require_same_grid(pi, base);
  require_unit_base(base);
  SamplePair out = linear_combine(pi, pj, c1, c2);
  for (std::size_t k = 0; k < out.input.size(); ++k) out.input[k] += c0 * base.input[k];
  for (std::size_t k = 0; k < out.output.size(); ++k) out.output[k] += c0 * base.output[k];
  return out;
}

SamplePair darcy_scale(const SamplePair& p, double c0) {
  if (c0 == 0.0) throw ParameterError("Darcy scaling constant must be nonzero");
  SamplePair out = p;
  for (std::size_t k = 0; k < out.input.size(); ++k) out.input[k] *= c0;
  for (std::size_t k = 0; k < out.output.size(); ++k) out.output[k] /= c0;
  return out;
}

Dataset augment_dataset(const Dataset& d, const SamplePair& base, const AugmentConfig& cfg) {
  cfg.validate();
  if (cfg.mode == AugmentMode::None) return d;
  if (d.pairs.empty()) throw ContractError("cannot augment an empty dataset");
  if (!(base.input.grid == d.grid())) throw DimensionError("translation base does not match the dataset grid");
  require_unit_base(base);

  const std::size_t n = d.size();
  const std::size_t extra = cfg.multiplier * n;
  Dataset out = d;
  out.augmentation = cfg;
  out.source_count = n;
  out.pairs.reserve(n + extra);
  for (std::size_t t = 0; t < extra; ++t) {
    Rng rng(derive_seed(cfg.seed, seed_tag::augment, t));
    const std::size_t i = rng.index(n);
    const std::size_t j = rng.index(n);
    double c0 = rng.uniform(cfg.c0_low, cfg.c0_high);
    double c1 = rng.uniform(cfg.coeff_low, cfg.coeff_high);
    double c2 = rng.uniform(cfg.coeff_low, cfg.coeff_high);
    if (cfg.mode == AugmentMode::Linear) c0 = 0.0;
    if (cfg.mode == AugmentMode::Translate) {
      c0 = 1.0;
      c1 = 1.0;
      c2 = 0.0;
    }
    out.pairs.push_back(combined(d.pairs[i], d.pairs[j], base, c0, c1, c2));
  }
  return out;
}

}  // namespace pgda
