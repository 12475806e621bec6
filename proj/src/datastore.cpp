// SPDX-License-Identifier: Apache-2.0
#include "pgda/datastore.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>
#include <zlib.h>

#include "pgda/error.hpp"
#include "pgda/serialize.hpp"

namespace fs = std::filesystem;

namespace pgda {

std::uint32_t crc32(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - done, 1u << 30);
    crc = ::crc32(crc, bytes.data() + done, static_cast<uInt>(chunk));
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw FormatError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

namespace {

std::uint32_t crc_of(const std::string& bytes, std::size_t offset, std::size_t count) {
  return crc32({reinterpret_cast<const unsigned char*>(bytes.data()) + offset, count});
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void append_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_f64(const std::string& in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)]);
  return std::bit_cast<double>(bits);
}

Json load_manifest(const fs::path& path, const char* format, int supported) {
  const Json j = parse_json(read_file(path), path.string());
  if (!j.is_object() || !j.contains("format") || j.at("format") != format)
    throw FormatError(path.string() + " is not a " + std::string(format) + " manifest");
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer())
    throw FormatError(path.string() + " has no format_version");
  const int version = j.at("format_version").get<int>();
  if (version != supported)
    throw VersionError(path.string() + " has format version " + std::to_string(version) + ", this build reads version " +
                       std::to_string(supported));
  return j;
}

// Payload bytes after size and checksum checks of each listed array.
std::string load_payload(const fs::path& manifest, const Json& arrays, std::size_t expected_total) {
  const fs::path bin = manifest.parent_path() / arrays.at("file").get<std::string>();
  std::string bytes = read_file(bin);
  if (bytes.size() < expected_total)
    throw TruncatedError(bin.string() + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                         std::to_string(expected_total));
  if (bytes.size() > expected_total)
    throw FormatError(bin.string() + " has " + std::to_string(bytes.size() - expected_total) + " trailing bytes");
  for (const Json& a : arrays.at("arrays")) {
    const auto offset = a.at("offset").get<std::size_t>();
    const auto count = a.at("bytes").get<std::size_t>();
    if (offset + count > bytes.size()) throw TruncatedError(bin.string() + " is shorter than its manifest");
    const std::string want = a.at("crc32").get<std::string>();
    const std::string got = hex32(crc_of(bytes, offset, count));
    if (want != got)
      throw ChecksumError(bin.string() + ": crc32 of '" + a.at("name").get<std::string>() + "' is " + got +
                          ", manifest says " + want);
  }
  return bytes;
}

template <class F>
auto manifest_field(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ParameterError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_dataset(const Dataset& d, const fs::path& manifest) {
  const std::size_t P = d.grid().point_count();
  std::string payload;
  payload.reserve(2 * d.size() * P * 8);
  for (const auto& pair : d.pairs) {
    if (pair.input.values.size() != P) throw DimensionError("dataset input does not match its grid");
    for (double v : pair.input.values.data()) append_f64(payload, v);
  }
  const std::size_t half = payload.size();
  for (const auto& pair : d.pairs) {
    if (pair.output.values.size() != P) throw DimensionError("dataset output does not match its grid");
    for (double v : pair.output.values.data()) append_f64(payload, v);
  }
  const fs::path bin = payload_path(manifest);
  Json j;
  j["format"] = "pgda-dataset";
  j["format_version"] = kDatasetFormatVersion;
  j["equation"] = d.equation;
  j["grf"] = d.grf;
  j["master_seed"] = d.master_seed;
  j["augmentation"] = d.augmentation ? Json(*d.augmentation) : Json(nullptr);
  j["count"] = d.size();
  j["source_count"] = d.source_count;
  j["payload"] = {{"file", bin.filename().string()},
                  {"encoding", "float64-le"},
                  {"arrays",
                   {{{"name", "inputs"}, {"offset", 0}, {"bytes", half}, {"crc32", hex32(crc_of(payload, 0, half))}},
                    {{"name", "outputs"},
                     {"offset", half},
                     {"bytes", payload.size() - half},
                     {"crc32", hex32(crc_of(payload, half, payload.size() - half))}}}}};
  write_file_atomic(bin, payload);
  write_file_atomic(manifest, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& manifest) {
  const Json j = load_manifest(manifest, "pgda-dataset", kDatasetFormatVersion);
  Dataset d;
  std::size_t count = 0;
  manifest_field(manifest, [&] {
    d.equation = j.at("equation").get<EquationSpec>();
    d.grf = j.at("grf").get<GrfConfig>();
    d.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (!j.at("augmentation").is_null()) d.augmentation = j.at("augmentation").get<AugmentConfig>();
    count = j.at("count").get<std::size_t>();
    d.source_count = j.at("source_count").get<std::size_t>();
    return 0;
  });
  try {
    d.equation.validate();
  } catch (const Error& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  const std::size_t P = d.grid().point_count();
  const std::size_t array_bytes = count * P * 8;
  const std::string bytes =
      manifest_field(manifest, [&] { return load_payload(manifest, j.at("payload"), 2 * array_bytes); });
  d.pairs.resize(count);
  const Shape shape = d.grid().value_shape();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> in(P), out(P);
    for (std::size_t k = 0; k < P; ++k) {
      in[k] = read_f64(bytes, (i * P + k) * 8);
      out[k] = read_f64(bytes, array_bytes + (i * P + k) * 8);
    }
    d.pairs[i].input = GridFunction{d.grid(), Tensor(shape, std::move(in))};
    d.pairs[i].output = GridFunction{d.grid(), Tensor(shape, std::move(out))};
  }
  return d;
}

void save_checkpoint(const ModelSpec& spec, const ModelParams& params, const fs::path& manifest,
                     const std::map<std::string, std::string>& tags) {
  spec.validate();
  check_params(spec, params);
  std::string payload;
  Json list = Json::array();
  for (const ParamSpec& p : pgda::manifest(spec)) {
    const std::size_t offset = payload.size();
    if (p.complex) {
      const ComplexTensor& t = params.complex.at(p.name);
      for (std::size_t i = 0; i < t.size(); ++i) {
        append_f64(payload, t.re()[i]);
        append_f64(payload, t.im()[i]);
      }
    } else {
      for (double v : params.real.at(p.name).data()) append_f64(payload, v);
    }
    list.push_back({{"name", p.name}, {"shape", p.shape}, {"complex", p.complex}, {"offset", offset}});
  }
  const fs::path bin = payload_path(manifest);
  Json j;
  j["format"] = "pgda-checkpoint";
  j["format_version"] = kCheckpointFormatVersion;
  j["model"] = spec;
  j["params"] = list;
  j["tags"] = tags;
  j["payload"] = {{"file", bin.filename().string()},
                  {"encoding", "float64-le"},
                  {"arrays",
                   {{{"name", "params"}, {"offset", 0}, {"bytes", payload.size()}, {"crc32", hex32(crc_of(payload, 0, payload.size()))}}}}};
  write_file_atomic(bin, payload);
  write_file_atomic(manifest, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
  const Json j = load_manifest(path, "pgda-checkpoint", kCheckpointFormatVersion);
  Checkpoint ck;
  std::vector<ParamSpec> stored;
  manifest_field(path, [&] {
    ck.spec = j.at("model").get<ModelSpec>();
    if (j.contains("tags")) ck.tags = j.at("tags").get<std::map<std::string, std::string>>();
    for (const Json& p : j.at("params"))
      stored.push_back({p.at("name").get<std::string>(), p.at("shape").get<Shape>(), p.at("complex").get<bool>()});
    return 0;
  });
  try {
    ck.spec.validate();
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const std::vector<ParamSpec> expected = manifest(ck.spec);
  if (stored != expected) throw FormatError(path.string() + ": parameter list does not match the stored model");
  std::size_t total = 0;
  for (const ParamSpec& p : stored) total += shape_size(p.shape) * (p.complex ? 16 : 8);
  const std::string bytes = manifest_field(path, [&] { return load_payload(path, j.at("payload"), total); });
  std::size_t offset = 0;
  for (const ParamSpec& p : stored) {
    const std::size_t count = shape_size(p.shape);
    if (p.complex) {
      ComplexTensor t(p.shape);
      for (std::size_t i = 0; i < count; ++i) {
        t.re()[i] = read_f64(bytes, offset);
        t.im()[i] = read_f64(bytes, offset + 8);
        offset += 16;
      }
      ck.params.complex.emplace(p.name, std::move(t));
    } else {
      std::vector<double> v(count);
      for (std::size_t i = 0; i < count; ++i, offset += 8) v[i] = read_f64(bytes, offset);
      ck.params.real.emplace(p.name, Tensor(p.shape, std::move(v)));
    }
  }
  return ck;
}

ModelParams load_checkpoint(const fs::path& path, const ModelSpec& expected) {
  Checkpoint ck = load_checkpoint(path);
  const std::vector<ParamSpec> want = manifest(expected);
  const std::vector<ParamSpec> have = manifest(ck.spec);
  for (std::size_t i = 0; i < std::max(want.size(), have.size()); ++i) {
    if (i >= have.size())
      throw DimensionError("checkpoint " + path.string() + " lacks parameter " + want[i].name);
    if (i >= want.size())
      throw DimensionError("checkpoint " + path.string() + " has extra parameter " + have[i].name);
    if (!(want[i] == have[i]))
      throw DimensionError("checkpoint " + path.string() + ": parameter " + have[i].name + " " +
                           shape_string(have[i].shape) + " does not match model parameter " + want[i].name + " " +
                           shape_string(want[i].shape));
  }
  if (!(ck.spec == expected))
    throw DimensionError("checkpoint " + path.string() + " was saved for a different model configuration");
  return std::move(ck.params);
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json key_json(const TestSetKey& k) { return Json{{"mean", k.mean}, {"length_scale", k.length_scale}}; }

TestSetKey key_from(const Json& j) { return {j.at("mean").get<double>(), j.at("length_scale").get<double>()}; }

}  // namespace

std::string report_csv(const RunReport& r) {
  r.validate();
  std::string out = "task,test_A,test_l,augmentation,model,mse\n";
  for (const RunRecord& run : r.runs)
    for (const auto& [key, mse] : run.mse)
      out += r.task + "," + shortest(key.mean) + "," + shortest(key.length_scale) + "," + to_string(run.augmentation) +
             "," + to_string(run.model) + "," + g17(mse) + "\n";
  return out;
}

void save_report(const RunReport& r, const fs::path& stem) {
  r.validate();
  Json j;
  j["format"] = "pgda-report";
  j["format_version"] = kReportFormatVersion;
  j["task"] = r.task;
  j["fingerprint"] = r.fingerprint;
  j["test_sets"] = Json::array();
  for (const TestSetKey& k : r.test_sets) j["test_sets"].push_back(key_json(k));
  j["runs"] = Json::array();
  for (const RunRecord& run : r.runs) {
    Json cells = Json::array();
    for (const auto& [key, mse] : run.mse) {
      Json c = key_json(key);
      c["mse"] = mse;
      cells.push_back(c);
    }
    j["runs"].push_back({{"model", to_string(run.model)},
                         {"augmentation", to_string(run.augmentation)},
                         {"wall_seconds", run.wall_seconds},
                         {"initial_loss", run.initial_loss},
                         {"epoch_loss", run.epoch_loss},
                         {"mse", cells}});
  }
  fs::path json_path = stem, csv_path = stem;
  json_path += ".json";
  csv_path += ".csv";
  write_file_atomic(json_path, j.dump(2) + "\n");
  write_file_atomic(csv_path, report_csv(r));
}

RunReport load_report(const fs::path& path) {
  const Json j = load_manifest(path, "pgda-report", kReportFormatVersion);
  RunReport r;
  manifest_field(path, [&] {
    r.task = j.at("task").get<std::string>();
    r.fingerprint = j.at("fingerprint").get<std::string>();
    for (const Json& k : j.at("test_sets")) r.test_sets.push_back(key_from(k));
    for (const Json& run : j.at("runs")) {
      RunRecord rec;
      rec.model = model_kind_from_string(run.at("model").get<std::string>());
      rec.augmentation = augment_mode_from_string(run.at("augmentation").get<std::string>());
      rec.wall_seconds = run.at("wall_seconds").get<double>();
      rec.initial_loss = run.at("initial_loss").get<double>();
      rec.epoch_loss = run.at("epoch_loss").get<std::vector<double>>();
      for (const Json& c : run.at("mse")) rec.mse.emplace_back(key_from(c), c.at("mse").get<double>());
      r.runs.push_back(std::move(rec));
    }
    return 0;
  });
  r.validate();
  return r;
}

}  // namespace pgda
