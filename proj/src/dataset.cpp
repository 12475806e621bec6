// SPDX-License-Identifier: Apache-2.0
#include "pgda/dataset.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

#include "pgda/error.hpp"
#include "pgda/parallel.hpp"

namespace pgda {

std::string to_string(EquationKind k) {
  switch (k) {
    case EquationKind::Antiderivative: return "antiderivative";
    case EquationKind::Poisson2D: return "poisson2d";
    case EquationKind::SingularAdvDiff: return "sp_advdiff";
  }
  return "antiderivative";
}

EquationKind equation_kind_from_string(const std::string& s) {
  if (s == "antiderivative") return EquationKind::Antiderivative;
  if (s == "poisson2d" || s == "poisson") return EquationKind::Poisson2D;
  if (s == "sp_advdiff" || s == "spadvdiff") return EquationKind::SingularAdvDiff;
  throw ParameterError("unknown equation kind '" + s + "'");
}

void EquationSpec::validate() const {
  grid.validate();
  const bool sp = kind == EquationKind::SingularAdvDiff;
  if (sp != epsilon.has_value())
    throw ParameterError("epsilon must be given exactly for the singularly perturbed equation");
  if (sp && !(*epsilon > 0.0 && *epsilon <= 0.1))
    throw ParameterError("epsilon must lie in (0, 0.1], got " + std::to_string(*epsilon));
  const int want_dims = kind == EquationKind::Poisson2D ? 2 : 1;
  if (grid.dims != want_dims)
    throw ParameterError(to_string(kind) + " needs a " + std::to_string(want_dims) + "D grid");
}

std::string to_string(AugmentMode m) {
  switch (m) {
    case AugmentMode::None: return "none";
    case AugmentMode::Linear: return "linear";
    case AugmentMode::Translate: return "translate";
    case AugmentMode::Combined: return "combined";
  }
  return "none";
}

AugmentMode augment_mode_from_string(const std::string& s) {
  if (s == "none") return AugmentMode::None;
  if (s == "linear") return AugmentMode::Linear;
  if (s == "translate") return AugmentMode::Translate;
  if (s == "combined") return AugmentMode::Combined;
  throw ParameterError("unknown augmentation mode '" + s + "' (expected none, linear, translate, combined)");
}

void AugmentConfig::validate() const {
  if (!(coeff_low < coeff_high)) throw ParameterError("augmentation needs coeff_low < coeff_high");
  if (!(c0_low < c0_high)) throw ParameterError("augmentation needs c0_low < c0_high");
  if (multiplier < 1) throw ParameterError("augmentation multiplier must be at least 1");
}

std::size_t thread_count() {
  if (const char* env = std::getenv("PGDA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pgda
