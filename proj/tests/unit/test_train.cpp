// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pgda/error.hpp"
#include "pgda/refsolve.hpp"
#include "pgda/train.hpp"

using namespace pgda;

namespace {

ModelParams scalar_param(double v) {
  ModelParams p;
  p.real.emplace("theta", Tensor({1}, v));
  return p;
}

ModelSpec small_deeponet() {
  ModelSpec s;
  s.kind = ModelKind::DeepONet;
  s.grid = {1, 8};
  s.deeponet = {8, 1, 8, 2, 16, Activation::Tanh};
  return s;
}

ModelSpec small_fno() {
  ModelSpec s;
  s.kind = ModelKind::Fno;
  s.grid = {1, 8};
  s.fno = {4, 2, 1, Activation::Gelu, 1};
  return s;
}

Dataset random_dataset(std::size_t count, std::uint64_t seed) {
  Dataset d;
  d.equation = {EquationKind::Antiderivative, std::nullopt, {1, 8}};
  d.grf.grid = d.equation.grid;
  d.source_count = count;
  for (std::size_t i = 0; i < count; ++i) {
    SamplePair p{GridFunction::zeros(d.grid()), GridFunction::zeros(d.grid())};
    p.input.values = oracle::random_tensor({8}, seed + 2 * i);
    p.output.values = oracle::random_tensor({8}, seed + 2 * i + 1);
    d.pairs.push_back(std::move(p));
  }
  return d;
}

/// Replaces every output with the model's own prediction plus `offset`.
Dataset self_labelled(const ModelSpec& s, const ModelParams& p, Dataset d, double offset) {
  for (auto& pair : d.pairs) {
    pair.output = predict_one(s, p, pair.input);
    for (auto& v : pair.output.values.vec()) v += offset;
  }
  return d;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  ModelParams p = scalar_param(0.5);
  AdamState st;
  adam_step(p, scalar_param(1.0), st, 1e-3, cfg);
  // m_hat = 1, v_hat = 1, step = lr / (1 + eps)
  EXPECT_NEAR(p.real.at("theta")[0] - 0.5, -1e-3 / (1.0 + 1e-8), 1e-12);
  EXPECT_NEAR(p.real.at("theta")[0] - 0.5, -1e-3, 1e-6);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  TrainConfig cfg;
  ModelParams p = init_params(small_fno(), 3);
  const ModelParams before = p;
  ModelParams g = p;
  for (auto& [_, t] : g.real) t = Tensor(t.shape(), 0.0);
  for (auto& [_, t] : g.complex) t = ComplexTensor(t.shape());
  AdamState st;
  adam_step(p, g, st, 1e-3, cfg);
  EXPECT_EQ(p, before);
}

TEST(Adam, QuadraticMakesProgress) {
  TrainConfig cfg;
  ModelParams p = scalar_param(1.0);
  AdamState st;
  double prev = 1.0;
  for (int i = 0; i < 10; ++i) {
    const double th = p.real.at("theta")[0];
    adam_step(p, scalar_param(2.0 * th), st, 1e-2, cfg);
    const double now = std::abs(p.real.at("theta")[0]);
    EXPECT_LT(now, prev);
    prev = now;
  }
  EXPECT_NEAR(prev, 0.9, 1e-3);
}

TEST(Adam, ComplexPlanesUpdateIndependently) {
  TrainConfig cfg;
  ModelParams p;
  p.complex.emplace("w", ComplexTensor({2}, {0.0, 0.0}, {0.0, 0.0}));
  ModelParams g;
  g.complex.emplace("w", ComplexTensor({2}, {1.0, 0.0}, {0.0, -3.0}));
  AdamState st;
  adam_step(p, g, st, 1e-3, cfg);
  const auto& w = p.complex.at("w");
  EXPECT_NEAR(w.re()[0], -1e-3, 1e-9);
  EXPECT_EQ(w.re()[1], 0.0);
  EXPECT_EQ(w.im()[0], 0.0);
  EXPECT_NEAR(w.im()[1], 1e-3, 1e-9);
}

TEST(Adam, KeyMismatchIsContractError) {
  TrainConfig cfg;
  AdamState st;
  ModelParams p = scalar_param(1.0);
  ModelParams g;
  g.real.emplace("other", Tensor({1}, 1.0));
  EXPECT_THROW(adam_step(p, g, st, 1e-3, cfg), ContractError);
  ModelParams wrong;
  wrong.real.emplace("theta", Tensor({2}, 1.0));
  EXPECT_THROW(adam_step(p, wrong, st, 1e-3, cfg), ContractError);
}

TEST(Schedule, HalvesEveryHundredEpochs) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(lr_at(0, cfg), 0.001);
  EXPECT_DOUBLE_EQ(lr_at(99, cfg), 0.001);
  EXPECT_DOUBLE_EQ(lr_at(100, cfg), 0.0005);
  EXPECT_DOUBLE_EQ(lr_at(399, cfg), 0.000125);
  EXPECT_DOUBLE_EQ(lr_at(499, cfg), 0.0000625);
}

TEST(TrainConfigValidation, RejectsBadValues) {
  TrainConfig c;
  c.lr0 = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Fit, MemorizesOneSample) {
  const ModelSpec s = small_deeponet();
  const EquationSpec eq{EquationKind::Antiderivative, std::nullopt, {1, 8}};
  Dataset one = generate_dataset(eq, {0.0, 0.2, eq.grid}, 1, 11);
  one.pairs[0] = constant_input_solution(eq);
  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.halve_every = 500;
  cfg.lr0 = 1e-2;
  cfg.batch_size = 1;
  const FitResult r = fit(s, init_params(s, 12), one, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 3000u);
  EXPECT_LT(r.epoch_loss.back(), 1e-6);
}

TEST(Fit, ZeroEpochsReturnsParamsUnchanged) {
  const ModelSpec s = small_fno();
  const ModelParams p = init_params(s, 13);
  TrainConfig cfg;
  cfg.epochs = 0;
  const Dataset d = random_dataset(4, 14);
  const FitResult r = fit(s, p, d, cfg);
  EXPECT_EQ(r.params, p);
  EXPECT_TRUE(r.epoch_loss.empty());
  // Initial loss is the full-set loss of the untouched parameters.
  double hand = 0.0;
  for (const SamplePair& q : d.pairs) {
    const GridFunction pred = predict_one(s, p, q.input);
    double e = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j) e += (pred[j] - q.output[j]) * (pred[j] - q.output[j]);
    hand += e / static_cast<double>(pred.size());
  }
  hand /= static_cast<double>(d.size());
  EXPECT_NEAR(r.initial_loss, hand, 1e-12 * hand);
}

TEST(Fit, DeterministicInSeeds) {
  const ModelSpec s = small_fno();
  const Dataset d = random_dataset(10, 15);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 3;
  cfg.seed = 16;
  const FitResult a = fit(s, init_params(s, 17), d, cfg);
  const FitResult b = fit(s, init_params(s, 17), d, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  cfg.seed = 18;
  EXPECT_NE(fit(s, init_params(s, 17), d, cfg).params, a.params);
}

TEST(Fit, ReducesLossOnAntiderivative) {
  const EquationSpec eq{EquationKind::Antiderivative, std::nullopt, {1, 8}};
  const Dataset d = generate_dataset(eq, {0.0, 0.2, eq.grid}, 100, 19);
  ModelSpec s = small_fno();
  s.fno = {8, 4, 2, Activation::Gelu, 1};
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 20;
  cfg.lr0 = 5e-3;
  const ModelParams p0 = init_params(s, 20);
  const double initial = evaluate(s, p0, d);
  const FitResult r = fit(s, p0, d, cfg);
  EXPECT_LT(evaluate(s, r.params, d), 0.01 * initial);
}

TEST(Fit, NonFiniteLossAbortsWithDiagnostic) {
  const ModelSpec s = small_fno();
  Dataset d = random_dataset(4, 21);
  d.pairs[2].output.values[3] = std::nan("");
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    fit(s, init_params(s, 22), d, cfg);
    FAIL();
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(Fit, RejectsEmptyOrMismatchedData) {
  const ModelSpec s = small_fno();
  TrainConfig cfg;
  EXPECT_THROW(fit(s, init_params(s, 0), Dataset{}, cfg), ContractError);
  Dataset wide = random_dataset(1, 23);
  wide.equation.grid = {1, 16};
  EXPECT_THROW(fit(s, init_params(s, 0), wide, cfg), DimensionError);
}

TEST(Evaluate, PerfectPredictorScoresZero) {
  const ModelSpec s = small_fno();
  const ModelParams p = init_params(s, 31);
  EXPECT_LT(evaluate(s, p, self_labelled(s, p, random_dataset(5, 32), 0.0)), 1e-28);
}

TEST(Evaluate, UnitOffsetScoresOne) {
  const ModelSpec s = small_fno();
  const ModelParams p = init_params(s, 33);
  EXPECT_NEAR(evaluate(s, p, self_labelled(s, p, random_dataset(5, 34), -1.0)), 1.0, 1e-12);
}

TEST(Evaluate, MatchesHandSum) {
  const ModelSpec s = small_deeponet();
  const ModelParams p = init_params(s, 35);
  const Dataset d = random_dataset(3, 36);
  double total = 0.0;
  for (const auto& pair : d.pairs) {
    const GridFunction pred = predict_one(s, p, pair.input);
    double sq = 0.0;
    for (std::size_t j = 0; j < 8; ++j) sq += (pred[j] - pair.output[j]) * (pred[j] - pair.output[j]);
    total += sq / 8.0;
  }
  EXPECT_NEAR(evaluate(s, p, d), total / 3.0, 1e-15);
}

TEST(Evaluate, InvariantUnderPermutation) {
  const ModelSpec s = small_fno();
  const ModelParams p = init_params(s, 37);
  const Dataset d = random_dataset(7, 38);
  Dataset r = d;
  std::reverse(r.pairs.begin(), r.pairs.end());
  EXPECT_NEAR(evaluate(s, p, d), evaluate(s, p, r), 1e-14);
}

TEST(Evaluate, SquaredL2ErrorAndShapeChecks) {
  const GridSpec g{1, 4};
  GridFunction a = GridFunction::zeros(g), b = GridFunction::zeros(g);
  a.values = Tensor({4}, {1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(squared_l2_error(a, b), 7.5);
  EXPECT_THROW(squared_l2_error(a, GridFunction::zeros({1, 5})), DimensionError);
  const ModelSpec s = small_fno();
  EXPECT_THROW(evaluate(s, init_params(s, 0), Dataset{}), ContractError);
}

TEST(Report, ValidateRequiresEveryTestSetOnce) {
  RunReport r;
  r.task = "antiderivative";
  r.test_sets = {{0.0, 0.2}, {10.0, 2.0}};
  RunRecord run;
  run.mse = {{{0.0, 0.2}, 1e-3}, {{10.0, 2.0}, 1.0}};
  r.runs = {run};
  EXPECT_NO_THROW(r.validate());
  RunReport missing = r;
  missing.runs[0].mse.pop_back();
  EXPECT_THROW(missing.validate(), ContractError);
  RunReport swapped = r;
  std::swap(swapped.runs[0].mse[0], swapped.runs[0].mse[1]);
  EXPECT_THROW(swapped.validate(), ContractError);
  RunReport dup = r;
  dup.test_sets[1] = dup.test_sets[0];
  EXPECT_THROW(dup.validate(), ContractError);
}
