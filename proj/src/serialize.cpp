// SPDX-License-Identifier: Apache-2.0
#include "pgda/serialize.hpp"

#include <algorithm>
#include <cstring>

#include "pgda/error.hpp"

namespace pgda {

void require_known_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ParameterError("unknown key '" + item.key() + "' in " + where);
  }
}

namespace {

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void read_size(const Json& j, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ParameterError(std::string("'") + key + "' must be a non-negative integer");
  out = v.get<std::size_t>();
}

void read_u64(const Json& j, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ParameterError(std::string("'") + key + "' must be a non-negative integer");
  out = v.get<std::uint64_t>();
}

void to_json(Json& j, const GridSpec& g) { j = Json{{"dims", g.dims}, {"n", g.n}}; }

void from_json(const Json& j, GridSpec& g) {
  require_known_keys(j, {"dims", "n"}, "grid");
  read(j, "dims", g.dims);
  read_size(j, "n", g.n);
}

void to_json(Json& j, const GrfConfig& c) {
  j = Json{{"mean", c.mean}, {"length_scale", c.length_scale}, {"grid", c.grid}, {"jitter", c.jitter}};
}

void from_json(const Json& j, GrfConfig& c) {
  require_known_keys(j, {"mean", "length_scale", "grid", "jitter"}, "grf");
  read(j, "mean", c.mean);
  read(j, "length_scale", c.length_scale);
  read(j, "grid", c.grid);
  read(j, "jitter", c.jitter);
}

void to_json(Json& j, const EquationSpec& e) {
  j = Json{{"kind", to_string(e.kind)}, {"grid", e.grid}};
  j["epsilon"] = e.epsilon ? Json(*e.epsilon) : Json(nullptr);
}

void from_json(const Json& j, EquationSpec& e) {
  require_known_keys(j, {"kind", "epsilon", "grid"}, "equation");
  if (j.contains("kind")) e.kind = equation_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("epsilon")) {
    if (j.at("epsilon").is_null())
      e.epsilon.reset();
    else
      e.epsilon = j.at("epsilon").get<double>();
  }
  read(j, "grid", e.grid);
}

void to_json(Json& j, const AugmentConfig& c) {
  j = Json{{"mode", to_string(c.mode)},       {"c0_low", c.c0_low},         {"c0_high", c.c0_high},
           {"coeff_low", c.coeff_low},        {"coeff_high", c.coeff_high}, {"multiplier", c.multiplier},
           {"seed", c.seed}};
}

void from_json(const Json& j, AugmentConfig& c) {
  require_known_keys(j, {"mode", "c0_low", "c0_high", "coeff_low", "coeff_high", "multiplier", "seed"}, "augment");
  if (j.contains("mode")) c.mode = augment_mode_from_string(j.at("mode").get<std::string>());
  read(j, "c0_low", c.c0_low);
  read(j, "c0_high", c.c0_high);
  read(j, "coeff_low", c.coeff_low);
  read(j, "coeff_high", c.coeff_high);
  read_size(j, "multiplier", c.multiplier);
  read_u64(j, "seed", c.seed);
}

void to_json(Json& j, const DeepONetConfig& c) {
  j = Json{{"sensors", c.sensors}, {"coord_dims", c.coord_dims}, {"p", c.p},
           {"depth", c.depth},     {"width", c.width},           {"activation", to_string(c.activation)}};
}

void from_json(const Json& j, DeepONetConfig& c) {
  require_known_keys(j, {"sensors", "coord_dims", "p", "depth", "width", "activation"}, "deeponet");
  read_size(j, "sensors", c.sensors);
  read_size(j, "coord_dims", c.coord_dims);
  read_size(j, "p", c.p);
  read_size(j, "depth", c.depth);
  read_size(j, "width", c.width);
  if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
}

void to_json(Json& j, const FnoConfig& c) {
  j = Json{{"width", c.width},
           {"k_max", c.k_max},
           {"layers", c.layers},
           {"activation", to_string(c.activation)},
           {"dims", c.dims}};
}

void from_json(const Json& j, FnoConfig& c) {
  require_known_keys(j, {"width", "k_max", "layers", "activation", "dims"}, "fno");
  read_size(j, "width", c.width);
  read_size(j, "k_max", c.k_max);
  read_size(j, "layers", c.layers);
  if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
  read(j, "dims", c.dims);
}

void to_json(Json& j, const ModelSpec& s) {
  j = Json{{"kind", to_string(s.kind)}, {"grid", s.grid}};
  if (s.kind == ModelKind::DeepONet)
    j["deeponet"] = s.deeponet;
  else
    j["fno"] = s.fno;
}

void from_json(const Json& j, ModelSpec& s) {
  require_known_keys(j, {"kind", "grid", "deeponet", "fno"}, "model");
  if (j.contains("kind")) s.kind = model_kind_from_string(j.at("kind").get<std::string>());
  read(j, "grid", s.grid);
  read(j, "deeponet", s.deeponet);
  read(j, "fno", s.fno);
}

void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"lr0", c.lr0},     {"halve_every", c.halve_every}, {"epochs", c.epochs},
           {"batch_size", c.batch_size}, {"beta1", c.beta1}, {"beta2", c.beta2},
           {"eps", c.eps},     {"seed", c.seed}};
}

void from_json(const Json& j, TrainConfig& c) {
  require_known_keys(j, {"lr0", "halve_every", "epochs", "batch_size", "beta1", "beta2", "eps", "seed"}, "train");
  read(j, "lr0", c.lr0);
  read_size(j, "halve_every", c.halve_every);
  read_size(j, "epochs", c.epochs);
  read_size(j, "batch_size", c.batch_size);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "eps", c.eps);
  read_u64(j, "seed", c.seed);
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace pgda
