// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgda/grf.hpp"
#include "pgda/grid.hpp"

namespace pgda {

enum class EquationKind { Antiderivative, Poisson2D, SingularAdvDiff };

std::string to_string(EquationKind k);
EquationKind equation_kind_from_string(const std::string& s);

/// Linear problem whose solution operator maps an input function to u.
///   Antiderivative:   u' = v on [0,1], u(0) = 0
///   Poisson2D:        -Laplace(u) = f on [0,1]^2, u = 0 on the boundary
///   SingularAdvDiff:  -eps u'' + u' = f on (0,1), u(0) = u(1) = 0
struct EquationSpec {
  EquationKind kind = EquationKind::Antiderivative;
  std::optional<double> epsilon;
  GridSpec grid{};

  void validate() const;
  friend bool operator==(const EquationSpec&, const EquationSpec&) = default;
};

enum class AugmentMode { None, Linear, Translate, Combined };

std::string to_string(AugmentMode m);
AugmentMode augment_mode_from_string(const std::string& s);

/// Coefficient ranges and volume for physics-guided augmentation.
/// c0 ~ U[c0_low, c0_high]; c1, c2 ~ U[coeff_low, coeff_high].
struct AugmentConfig {
  AugmentMode mode = AugmentMode::Combined;
  double c0_low = -10.0;
  double c0_high = 10.0;
  double coeff_low = -2.0;
  double coeff_high = 2.0;
  std::size_t multiplier = 3;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

struct SamplePair {
  GridFunction input;
  GridFunction output;

  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

/// Matched input/solution pairs with their provenance.
struct Dataset {
  EquationSpec equation{};
  GrfConfig grf{};
  std::uint64_t master_seed = 0;
  /// Set when pairs beyond the first `source_count` were produced by augmentation.
  std::optional<AugmentConfig> augmentation;
  std::size_t source_count = 0;
  std::vector<SamplePair> pairs;

  std::size_t size() const { return pairs.size(); }
  const GridSpec& grid() const { return equation.grid; }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace pgda
