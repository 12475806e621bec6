// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pgda/grid.hpp"
#include "pgda/tape.hpp"

namespace pgda {

/// Branch/trunk operator network: G(v)(x) = sum_k b_k(v) t_k(x) + b0.
///
/// Each subnet has `depth` dense layers of hidden size `width` ending in `p`
/// outputs. The branch ends linearly; the trunk applies the activation after
/// every layer.
struct DeepONetConfig {
  std::size_t sensors = 32;  ///< branch input size (n or n*n)
  std::size_t coord_dims = 1;
  std::size_t p = 128;
  std::size_t depth = 4;
  std::size_t width = 128;
  Activation activation = Activation::Tanh;

  void validate() const;
  friend bool operator==(const DeepONetConfig&, const DeepONetConfig&) = default;
};

/// Fourier neural operator: pointwise lift of (v, x) to `width` channels,
/// `layers` blocks z <- act(SpectralConv(z) + z W + b), then a two-layer
/// pointwise projection width -> 2*width -> 1.
struct FnoConfig {
  std::size_t width = 32;  ///< d_v
  std::size_t k_max = 16;
  std::size_t layers = 4;
  Activation activation = Activation::Gelu;
  int dims = 1;

  void validate(std::size_t grid_n) const;
  friend bool operator==(const FnoConfig&, const FnoConfig&) = default;
};

enum class ModelKind { DeepONet, Fno };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Architecture plus the grid it is trained on.
struct ModelSpec {
  ModelKind kind = ModelKind::Fno;
  GridSpec grid{};
  DeepONetConfig deeponet{};
  FnoConfig fno{};

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  bool complex = false;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Trainable weights by name. Dense weights are stored [in x out].
struct ModelParams {
  std::map<std::string, Tensor> real;
  std::map<std::string, ComplexTensor> complex;

  std::size_t scalar_count() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Declared parameters of an architecture, in initialization order.
std::vector<ParamSpec> manifest(const ModelSpec& spec);

/// Throws DimensionError unless `params` holds exactly the manifest.
void check_params(const ModelSpec& spec, const ModelParams& params);

/// Glorot-uniform dense weights, zero biases (and b0). Spectral weights have
/// real and imaginary parts uniform in [0, 1/width^2). Parameter i of the
/// manifest draws from derive_seed(seed, seed_tag::init, i).
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Parameters recorded as tape leaves.
struct BoundParams {
  std::map<std::string, Var> vars;
  Var operator[](const std::string& name) const;
};

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable = true);

/// Gradients of the bound leaves, shaped like the parameters.
ModelParams gradients(const Tape& tape, const BoundParams& bound, const ModelParams& like);

/// sensors [B x m], coords [M x dim] -> [B x M].
Var deeponet_forward(const DeepONetConfig& cfg, const BoundParams& params, Var sensors, Var coords);

/// lifted [(B*P) x (1+dims)] holding (v, coordinates) per point -> [B x P].
Var fno_forward(const FnoConfig& cfg, const BoundParams& params, Var lifted, std::size_t batch, std::size_t n);

/// Forward pass for a batch given as a [B x P] value matrix -> [B x P].
Var model_forward(Tape& tape, const ModelSpec& spec, const BoundParams& params, const Tensor& batch_values);

/// Value-only evaluation; inputs [B x P] -> predictions [B x P].
Tensor predict(const ModelSpec& spec, const ModelParams& params, const Tensor& batch_values);

GridFunction predict_one(const ModelSpec& spec, const ModelParams& params, const GridFunction& input);

/// Training loss: mean of squared errors over samples and collocation points.
Var loss_mse(Var pred, const Tensor& target);

}  // namespace pgda
