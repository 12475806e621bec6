// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pgda/dataset.hpp"
#include "pgda/models.hpp"
#include "pgda/serialize.hpp"
#include "pgda/train.hpp"

namespace pgda {

/// Per-model training settings; unset fields fall back to the shared `train` block.
struct TrainOverride {
  std::optional<double> lr0;
  std::optional<std::size_t> halve_every, epochs, batch_size;

  bool empty() const { return !lr0 && !halve_every && !epochs && !batch_size; }
  TrainConfig apply(TrainConfig t) const;
  friend bool operator==(const TrainOverride&, const TrainOverride&) = default;
};

/// Everything one experiment needs. The equation grid is authoritative:
/// GRF and model grids follow it. All randomness derives from `seed`:
///   train data   derive_seed(seed, train_data)
///   test set i   derive_seed(seed, test_data, i)
///   augmentation derive_seed(seed, augment)
///   model init   derive_seed(seed, init, model)       model: 0 deeponet, 1 fno
///   shuffling    derive_seed(seed, shuffle, 2*model + augmented)
struct ExperimentConfig {
  std::string task = "antiderivative";
  EquationSpec equation{};
  GrfConfig train_grf{};
  std::size_t train_count = 1000;
  std::vector<TestSetKey> test_sets;
  std::size_t test_count = 200;
  AugmentConfig augment{};
  ModelKind model = ModelKind::Fno;  ///< default for the train command
  DeepONetConfig deeponet{};
  FnoConfig fno{};
  TrainConfig train{};
  TrainOverride deeponet_train{}, fno_train{};  ///< "train" inside the "deeponet" / "fno" blocks
  std::string output_dir = "runs";
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Names accepted by `preset`: antiderivative, poisson, spadvdiff.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& task);

/// JSON object; keys absent from it keep the values of preset(task).
ExperimentConfig experiment_from_json(const Json& j);
Json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// crc32 of the canonical JSON form, 8 hex digits.
std::string config_fingerprint(const ExperimentConfig& c);

GrfConfig test_grf(const ExperimentConfig& c, const TestSetKey& key);
AugmentConfig augment_config(const ExperimentConfig& c, AugmentMode mode);
ModelSpec model_spec(const ExperimentConfig& c, ModelKind kind);
TrainConfig train_config(const ExperimentConfig& c, ModelKind kind, bool augmented);
std::uint64_t init_seed(const ExperimentConfig& c, ModelKind kind);

/// File stem for a test set, e.g. "test_A10_l0.2".
std::string test_set_name(const TestSetKey& key);

struct GeneratedData {
  Dataset train;
  std::vector<Dataset> tests;  ///< in config order
};

GeneratedData generate_data(const ExperimentConfig& c, std::size_t threads);
Dataset augment_train(const ExperimentConfig& c, const Dataset& train, AugmentMode mode);

using LogFn = std::function<void(const std::string&)>;

struct PipelineOptions {
  std::size_t threads = 1;
  std::size_t log_every = 50;  ///< epochs between progress lines; 0 disables
  LogFn log;
};

FitResult train_model(const ExperimentConfig& c, ModelKind kind, const Dataset& train, const PipelineOptions& opt);

/// "epoch,loss" CSV: row 0 is the loss before training, row e the mean loss of epoch e.
std::string loss_csv(const FitResult& fr);

/// v0 = sin(pi x) (1D) or sin(pi x) sin(pi y) (2D) and 2 v0 + 10.
std::vector<std::pair<std::string, GridFunction>> probe_inputs(const GridSpec& grid);

struct ProbeError {
  ModelKind model;
  AugmentMode augmentation;
  std::string probe;
  double error;  ///< squared discrete L2 error
};

/// One pass/fail line of the reproduction summary.
struct Check {
  std::string name;
  double value;
  std::string relation;  ///< "<=" or ">="
  double threshold;
  bool pass;
};

/// Threshold checks for a finished reproduction of `task`.
std::vector<Check> acceptance_checks(const std::string& task, const RunReport& report,
                                     const std::vector<ProbeError>& probes);
std::string format_check(const Check& c);

struct ReproduceResult {
  RunReport report;
  std::vector<ProbeError> probes;
  std::vector<Check> checks;
  bool passed() const;
};

/// gen -> augment (none, combined) -> train both models -> evaluate every
/// test set. Writes under `out`: data/, <model>_<augmentation>/ checkpoints
/// and loss curves, probes/, report.{json,csv}, summary.txt.
ReproduceResult reproduce(const ExperimentConfig& c, const std::filesystem::path& out, const PipelineOptions& opt);

}  // namespace pgda
