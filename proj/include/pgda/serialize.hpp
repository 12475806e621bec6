// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "pgda/dataset.hpp"
#include "pgda/models.hpp"
#include "pgda/train.hpp"

// JSON forms of the configuration types. Readers reject unknown keys and
// fill absent keys from the struct defaults.
namespace pgda {

using Json = nlohmann::json;

/// Throws ParameterError naming the first key of `j` not in `allowed`.
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Reads an optional non-negative integer; ParameterError for -3 or 1.5.
void read_size(const Json& j, const char* key, std::size_t& out);
void read_u64(const Json& j, const char* key, std::uint64_t& out);

void to_json(Json& j, const GridSpec& g);
void from_json(const Json& j, GridSpec& g);
void to_json(Json& j, const GrfConfig& c);
void from_json(const Json& j, GrfConfig& c);
void to_json(Json& j, const EquationSpec& e);
void from_json(const Json& j, EquationSpec& e);
void to_json(Json& j, const AugmentConfig& c);
void from_json(const Json& j, AugmentConfig& c);
void to_json(Json& j, const DeepONetConfig& c);
void from_json(const Json& j, DeepONetConfig& c);
void to_json(Json& j, const FnoConfig& c);
void from_json(const Json& j, FnoConfig& c);
void to_json(Json& j, const ModelSpec& s);
void from_json(const Json& j, ModelSpec& s);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);

/// Parse text, mapping syntax and type errors to FormatError.
Json parse_json(const std::string& text, const std::string& what);

}  // namespace pgda
