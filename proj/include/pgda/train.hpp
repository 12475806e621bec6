// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pgda/dataset.hpp"
#include "pgda/models.hpp"

namespace pgda {

struct TrainConfig {
  double lr0 = 1e-3;
  std::size_t halve_every = 100;
  std::size_t epochs = 500;
  std::size_t batch_size = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// lr0 * 2^-floor(epoch / halve_every).
double lr_at(std::size_t epoch, const TrainConfig& cfg);

/// First and second moments per parameter; complex weights keep separate
/// moments for the real and imaginary planes.
struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const TrainConfig& cfg);

struct FitResult {
  ModelParams params;
  double initial_loss = 0.0;       ///< training-set loss before the first update
  std::vector<double> epoch_loss;  ///< sample-weighted mean batch loss per epoch
};

/// Called after each epoch with (epoch, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Mini-batch Adam on the mean squared loss. Epoch e shuffles with
/// Rng(derive_seed(cfg.seed, seed_tag::shuffle, e)). A non-finite loss aborts
/// with NumericalError naming epoch, batch and learning rate.
FitResult fit(const ModelSpec& spec, ModelParams params, const Dataset& train, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

/// Squared discrete L2 error of one prediction: mean over grid points of
/// squared differences.
double squared_l2_error(const GridFunction& pred, const GridFunction& target);

/// (1/N) sum_i |G_N(v_i) - u_i|^2 with the discrete L2 norm
/// |w| = sqrt(mean_j w_j^2).
double evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& test);

/// A test distribution, identified by its GRF mean A and length scale l.
struct TestSetKey {
  double mean = 0.0;
  double length_scale = 0.2;

  friend bool operator==(const TestSetKey&, const TestSetKey&) = default;
};

/// One trained (model, augmentation) cell.
struct RunRecord {
  ModelKind model = ModelKind::Fno;
  AugmentMode augmentation = AugmentMode::None;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
  /// Final MSE per test set, in the report's test-set order.
  std::vector<std::pair<TestSetKey, double>> mse;
  double wall_seconds = 0.0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunReport {
  std::string task;
  std::vector<TestSetKey> test_sets;
  std::vector<RunRecord> runs;
  /// crc32 of the serialized configuration, hex.
  std::string fingerprint;

  /// ContractError unless every run lists every test set exactly once.
  void validate() const;
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

}  // namespace pgda
