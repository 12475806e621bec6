// SPDX-License-Identifier: Apache-2.0
#include "pgda/models.hpp"

#include <cmath>

#include "pgda/error.hpp"
#include "pgda/fft.hpp"
#include "pgda/rng.hpp"

namespace pgda {

void DeepONetConfig::validate() const {
  if (sensors < 1 || p < 1 || depth < 1 || width < 1 || coord_dims < 1)
    throw ParameterError("DeepONet sizes (sensors, p, depth, width) must be at least 1");
}

void FnoConfig::validate(std::size_t grid_n) const {
  if (width < 1 || layers < 1 || k_max < 1) throw ParameterError("FNO width, layers and k_max must be at least 1");
  if (dims != 1 && dims != 2) throw ParameterError("FNO dims must be 1 or 2");
  if (!is_power_of_two(grid_n)) throw ParameterError("FNO grid size must be a power of two, got " + std::to_string(grid_n));
  if (k_max > grid_n / 2 || (dims == 2 && 2 * k_max > grid_n))
    throw ParameterError("FNO k_max " + std::to_string(k_max) + " exceeds the modes of a " + std::to_string(grid_n) +
                         "-point grid");
}

std::string to_string(ModelKind k) { return k == ModelKind::DeepONet ? "deeponet" : "fno"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "deeponet") return ModelKind::DeepONet;
  if (s == "fno") return ModelKind::Fno;
  throw ParameterError("unknown model '" + s + "' (expected deeponet or fno)");
}

void ModelSpec::validate() const {
  grid.validate();
  if (kind == ModelKind::DeepONet) {
    deeponet.validate();
    if (deeponet.sensors != grid.point_count())
      throw ParameterError("DeepONet sensor count must equal the grid point count");
    if (deeponet.coord_dims != static_cast<std::size_t>(grid.dims))
      throw ParameterError("DeepONet coordinate dimension must match the grid");
  } else {
    fno.validate(grid.n);
    if (fno.dims != grid.dims) throw ParameterError("FNO dims must match the grid");
  }
}

std::size_t ModelParams::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [_, t] : real) total += t.size();
  for (const auto& [_, t] : complex) total += 2 * t.size();
  return total;
}

namespace {

void dense_manifest(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in, std::size_t hidden,
                    std::size_t outputs, std::size_t depth) {
  std::size_t from = in;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t to = l + 1 == depth ? outputs : hidden;
    out.push_back({prefix + "." + std::to_string(l) + ".weight", {from, to}, false});
    out.push_back({prefix + "." + std::to_string(l) + ".bias", {to}, false});
    from = to;
  }
}

bool is_bias(const std::string& name) {
  return name == "b0" || (name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0);
}

}  // namespace

std::vector<ParamSpec> manifest(const ModelSpec& spec) {
  spec.validate();
  std::vector<ParamSpec> out;
  if (spec.kind == ModelKind::DeepONet) {
    const auto& c = spec.deeponet;
    dense_manifest(out, "branch", c.sensors, c.width, c.p, c.depth);
    dense_manifest(out, "trunk", c.coord_dims, c.width, c.p, c.depth);
    out.push_back({"b0", {1}, false});
    return out;
  }
  const auto& c = spec.fno;
  const std::size_t modes = c.dims == 1 ? c.k_max : 2 * c.k_max * c.k_max;
  out.push_back({"lift.weight", {static_cast<std::size_t>(1 + c.dims), c.width}, false});
  out.push_back({"lift.bias", {c.width}, false});
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "layer." + std::to_string(l);
    out.push_back({p + ".spectral", {modes, c.width, c.width}, true});
    out.push_back({p + ".weight", {c.width, c.width}, false});
    out.push_back({p + ".bias", {c.width}, false});
  }
  dense_manifest(out, "proj", c.width, 2 * c.width, 1, 2);
  return out;
}

void check_params(const ModelSpec& spec, const ModelParams& params) {
  const auto specs = manifest(spec);
  std::size_t real = 0, cplx = 0;
  for (const auto& s : specs) {
    if (s.complex) {
      ++cplx;
      auto it = params.complex.find(s.name);
      if (it == params.complex.end()) throw DimensionError("missing complex parameter '" + s.name + "'");
      if (it->second.shape() != s.shape)
        throw DimensionError("parameter '" + s.name + "' has shape " + shape_string(it->second.shape()) +
                             ", expected " + shape_string(s.shape));
    } else {
      ++real;
      auto it = params.real.find(s.name);
      if (it == params.real.end()) throw DimensionError("missing parameter '" + s.name + "'");
      if (it->second.shape() != s.shape)
        throw DimensionError("parameter '" + s.name + "' has shape " + shape_string(it->second.shape()) +
                             ", expected " + shape_string(s.shape));
    }
  }
  if (real != params.real.size() || cplx != params.complex.size())
    throw DimensionError("parameter set has entries outside the architecture manifest");
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  const auto specs = manifest(spec);
  ModelParams params;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ParamSpec& s = specs[i];
    Rng rng(derive_seed(seed, seed_tag::init, i));
    if (s.complex) {
      ComplexTensor w(s.shape);
      const double hi = 1.0 / static_cast<double>(s.shape[1] * s.shape[2]);
      for (std::size_t k = 0; k < w.size(); ++k) {
        w.re()[k] = rng.uniform(0.0, hi);
        w.im()[k] = rng.uniform(0.0, hi);
      }
      params.complex.emplace(s.name, std::move(w));
    } else if (is_bias(s.name)) {
      params.real.emplace(s.name, Tensor(s.shape, 0.0));
    } else {
      Tensor w(s.shape);
      const double bound = std::sqrt(6.0 / static_cast<double>(s.shape[0] + s.shape[1]));
      for (auto& v : w.vec()) v = rng.uniform(-bound, bound);
      params.real.emplace(s.name, std::move(w));
    }
  }
  return params;
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw ContractError("parameter '" + name + "' is not bound");
  return it->second;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable) {
  BoundParams b;
  for (const auto& [name, t] : params.real) b.vars.emplace(name, trainable ? tape.variable(t) : tape.constant(t));
  for (const auto& [name, t] : params.complex) b.vars.emplace(name, tape.complex_variable(t, trainable));
  return b;
}

ModelParams gradients(const Tape& tape, const BoundParams& bound, const ModelParams& like) {
  ModelParams g;
  for (const auto& [name, _] : like.real) g.real.emplace(name, tape.grad(bound[name]));
  for (const auto& [name, _] : like.complex) g.complex.emplace(name, tape.complex_grad(bound[name]));
  return g;
}

namespace {

Var dense_stack(const BoundParams& params, const std::string& prefix, std::size_t depth, Var x, Activation act,
                bool activate_last) {
  for (std::size_t l = 0; l < depth; ++l) {
    const std::string p = prefix + "." + std::to_string(l);
    x = add_row_bias(matmul(x, params[p + ".weight"]), params[p + ".bias"]);
    if (l + 1 < depth || activate_last) x = activation(x, act);
  }
  return x;
}

}  // namespace

Var deeponet_forward(const DeepONetConfig& cfg, const BoundParams& params, Var sensors, Var coords) {
  if (sensors.value().rank() != 2 || sensors.value().dim(1) != cfg.sensors)
    throw DimensionError("DeepONet branch expects [batch x " + std::to_string(cfg.sensors) + "], got " +
                         shape_string(sensors.value().shape()));
  if (coords.value().rank() != 2 || coords.value().dim(1) != cfg.coord_dims)
    throw DimensionError("DeepONet trunk expects [points x " + std::to_string(cfg.coord_dims) + "], got " +
                         shape_string(coords.value().shape()));
  Var b = dense_stack(params, "branch", cfg.depth, sensors, cfg.activation, false);
  Var t = dense_stack(params, "trunk", cfg.depth, coords, cfg.activation, true);
  return add_scalar(matmul(b, t, false, true), params["b0"]);
}

Var fno_forward(const FnoConfig& cfg, const BoundParams& params, Var lifted, std::size_t batch, std::size_t n) {
  const std::size_t points = cfg.dims == 1 ? n : n * n;
  if (lifted.value().rank() != 2 || lifted.value().dim(0) != batch * points ||
      lifted.value().dim(1) != static_cast<std::size_t>(1 + cfg.dims))
    throw DimensionError("FNO input " + shape_string(lifted.value().shape()) + " does not match " +
                         std::to_string(batch) + " grids of " + std::to_string(points) + " points");
  const SpectralLayout layout{batch, n, static_cast<std::size_t>(cfg.dims), cfg.k_max};
  Var z = add_row_bias(matmul(lifted, params["lift.weight"]), params["lift.bias"]);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer." + std::to_string(l);
    Var spectral = spectral_conv(z, params[p + ".spectral"], layout);
    Var local = add_row_bias(matmul(z, params[p + ".weight"]), params[p + ".bias"]);
    z = activation(add(spectral, local), cfg.activation);
  }
  Var out = dense_stack(params, "proj", 2, z, cfg.activation, false);
  return reshape(out, {batch, points});
}

Var model_forward(Tape& tape, const ModelSpec& spec, const BoundParams& params, const Tensor& batch_values) {
  const std::size_t P = spec.grid.point_count();
  if (batch_values.rank() != 2 || batch_values.dim(1) != P)
    throw DimensionError("model input " + shape_string(batch_values.shape()) + " does not match grid of " +
                         std::to_string(P) + " points");
  const std::size_t B = batch_values.dim(0);
  const auto pts = spec.grid.points();
  const std::size_t dims = static_cast<std::size_t>(spec.grid.dims);
  if (spec.kind == ModelKind::DeepONet) {
    Tensor coords({P, dims});
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t d = 0; d < dims; ++d) coords.at(i, d) = pts[i][d];
    return deeponet_forward(spec.deeponet, params, tape.constant(batch_values), tape.constant(std::move(coords)));
  }
  Tensor lifted({B * P, 1 + dims});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < P; ++i) {
      const std::size_t row = b * P + i;
      lifted.at(row, 0) = batch_values.at(b, i);
      for (std::size_t d = 0; d < dims; ++d) lifted.at(row, 1 + d) = pts[i][d];
    }
  return fno_forward(spec.fno, params, tape.constant(std::move(lifted)), B, spec.grid.n);
}

Tensor predict(const ModelSpec& spec, const ModelParams& params, const Tensor& batch_values) {
  Tape tape;
  const BoundParams bound = bind(tape, params, false);
  return model_forward(tape, spec, bound, batch_values).value();
}

GridFunction predict_one(const ModelSpec& spec, const ModelParams& params, const GridFunction& input) {
  if (!(input.grid == spec.grid)) throw DimensionError("input grid does not match the model grid");
  Tensor row({1, input.size()}, input.values.vec());
  Tensor out = predict(spec, params, row);
  return GridFunction{input.grid, out.reshaped(input.grid.value_shape())};
}

Var loss_mse(Var pred, const Tensor& target) {
  if (pred.value().shape() != target.shape())
    throw DimensionError("loss: prediction " + shape_string(pred.value().shape()) + " vs target " +
                         shape_string(target.shape()));
  return mse(pred, target);
}

}  // namespace pgda
