// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "pgda/dataset.hpp"
#include "pgda/models.hpp"
#include "pgda/train.hpp"

// On-disk formats. A dataset or checkpoint is a JSON manifest `<stem>.json`
// plus a raw payload `<stem>.bin` of little-endian IEEE-754 float64 values,
// with the payload's crc32 (zlib polynomial) recorded in the manifest.
//
// Dataset payload: inputs array then outputs array, each [count x points],
// sample-major, points in grid row-major order.
// Checkpoint payload: parameters in manifest order, row-major; complex
// parameters interleave re, im per element.
//
// Every file is written to a temporary name and renamed into place.
namespace pgda {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

std::uint32_t crc32(std::span<const unsigned char> bytes);

/// Write `bytes` to a sibling temporary file, then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// `<stem>.bin` next to a `<stem>.json` manifest.
std::filesystem::path payload_path(const std::filesystem::path& manifest);

void save_dataset(const Dataset& d, const std::filesystem::path& manifest);
/// Errors: VersionError (checked before the payload is opened),
/// TruncatedError, ChecksumError, FormatError for anything else malformed.
Dataset load_dataset(const std::filesystem::path& manifest);

struct Checkpoint {
  ModelSpec spec;
  ModelParams params;
  /// Free-form provenance (task, augmentation mode, ...).
  std::map<std::string, std::string> tags;
};

void save_checkpoint(const ModelSpec& spec, const ModelParams& params, const std::filesystem::path& manifest,
                     const std::map<std::string, std::string>& tags = {});
Checkpoint load_checkpoint(const std::filesystem::path& manifest);
/// Loads and checks the stored parameter manifest against `expected`;
/// DimensionError names the first mismatching parameter.
ModelParams load_checkpoint(const std::filesystem::path& manifest, const ModelSpec& expected);

/// CSV rows task,test_A,test_l,augmentation,model,mse; mse printed with 17
/// significant digits. Wall-clock time is kept out of the CSV so repeated
/// runs compare byte for byte.
std::string report_csv(const RunReport& r);
/// Writes `<stem>.json` and `<stem>.csv`. ContractError for an incomplete report.
void save_report(const RunReport& r, const std::filesystem::path& stem);
RunReport load_report(const std::filesystem::path& json);

}  // namespace pgda
