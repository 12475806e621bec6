// SPDX-License-Identifier: Apache-2.0
#include "pgda/train.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "pgda/error.hpp"
#include "pgda/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pgda {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ParameterError("learning rate must be positive");
  if (batch_size < 1) throw ParameterError("batch size must be at least 1");
  if (halve_every < 1) throw ParameterError("halve_every must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ParameterError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ParameterError("Adam eps must be positive");
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return std::ldexp(cfg.lr0, -static_cast<int>(epoch / cfg.halve_every));
}

namespace {

void adam_update(std::span<double> theta, std::span<const double> g, std::vector<double>& m, std::vector<double>& v,
                 double lr, double c1, double c2, const TrainConfig& cfg) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const TrainConfig& cfg) {
  if (params.real.size() != grads.real.size() || params.complex.size() != grads.complex.size())
    throw ContractError("gradient keys do not match parameter keys");
  for (const auto& [name, p] : params.real) {
    auto it = grads.real.find(name);
    if (it == grads.real.end() || it->second.shape() != p.shape())
      throw ContractError("gradient for '" + name + "' is missing or misshapen");
  }
  for (const auto& [name, p] : params.complex) {
    auto it = grads.complex.find(name);
    if (it == grads.complex.end() || it->second.shape() != p.shape())
      throw ContractError("gradient for '" + name + "' is missing or misshapen");
  }
  if (state.t == 0 && state.m.real.empty() && state.m.complex.empty()) {
    for (const auto& [name, p] : params.real) {
      state.m.real.emplace(name, Tensor(p.shape(), 0.0));
      state.v.real.emplace(name, Tensor(p.shape(), 0.0));
    }
    for (const auto& [name, p] : params.complex) {
      state.m.complex.emplace(name, ComplexTensor(p.shape()));
      state.v.complex.emplace(name, ComplexTensor(p.shape()));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : params.real)
    adam_update(p.data(), grads.real.at(name).data(), state.m.real.at(name).vec(), state.v.real.at(name).vec(), lr, c1,
                c2, cfg);
  for (auto& [name, p] : params.complex) {
    const ComplexTensor& g = grads.complex.at(name);
    adam_update(p.re(), g.re(), state.m.complex.at(name).re(), state.v.complex.at(name).re(), lr, c1, c2, cfg);
    adam_update(p.im(), g.im(), state.m.complex.at(name).im(), state.v.complex.at(name).im(), lr, c1, c2, cfg);
  }
}

namespace {

// Rows [begin, end) of the dataset's inputs or outputs as a [B x P] matrix.
Tensor gather(const Dataset& d, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end,
              bool outputs) {
  const std::size_t P = d.grid().point_count();
  Tensor out({end - begin, P});
  for (std::size_t r = begin; r < end; ++r) {
    const GridFunction& g = outputs ? d.pairs[order[r]].output : d.pairs[order[r]].input;
    std::copy(g.values.vec().begin(), g.values.vec().end(), out.vec().begin() + static_cast<std::ptrdiff_t>((r - begin) * P));
  }
  return out;
}

// Tape buffers are large and short-lived; keep freed blocks in the heap
// instead of returning them to the OS on every step.
void retain_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

}  // namespace

FitResult fit(const ModelSpec& spec, ModelParams params, const Dataset& train, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  check_params(spec, params);
  if (train.pairs.empty()) throw ContractError("training set is empty");
  if (!(train.grid() == spec.grid)) throw DimensionError("training grid does not match the model grid");
  retain_heap();

  FitResult result;
  result.initial_loss = evaluate(spec, params, train);
  AdamState state;
  const std::size_t N = train.size();
  std::vector<std::size_t> order(N);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, seed_tag::shuffle, e));
    for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    const double lr = lr_at(e, cfg);
    double total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < N; begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(N, begin + cfg.batch_size);
      const Tensor inputs = gather(train, order, begin, end, false);
      const Tensor targets = gather(train, order, begin, end, true);
      double loss_value = 0.0;
      ModelParams grads;
      try {
        Tape tape;
        const BoundParams bound = bind(tape, params);
        Var loss = loss_mse(model_forward(tape, spec, bound, inputs), targets);
        loss_value = loss.value()[0];
        if (!std::isfinite(loss_value)) throw NumericalError("non-finite loss");
        tape.backward(loss);
        grads = gradients(tape, bound, params);
      } catch (const NumericalError& err) {
        std::ostringstream os;
        os << "training diverged at epoch " << e << ", batch " << batch_index << ", lr " << lr << ": " << err.what();
        throw NumericalError(os.str());
      }
      adam_step(params, grads, state, lr, cfg);
      total += loss_value * static_cast<double>(end - begin);
    }
    result.epoch_loss.push_back(total / static_cast<double>(N));
    if (on_epoch) on_epoch(e, result.epoch_loss.back());
  }
  result.params = std::move(params);
  return result;
}

double squared_l2_error(const GridFunction& pred, const GridFunction& target) {
  if (pred.size() != target.size()) throw DimensionError("prediction and target sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double evaluate(const ModelSpec& spec, const ModelParams& params, const Dataset& test) {
  check_params(spec, params);
  if (test.pairs.empty()) throw ContractError("test set is empty");
  if (!(test.grid() == spec.grid)) throw DimensionError("test grid does not match the model grid");
  retain_heap();
  const std::size_t N = test.size();
  const std::size_t P = spec.grid.point_count();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  constexpr std::size_t chunk = 100;
  double total = 0.0;
  for (std::size_t begin = 0; begin < N; begin += chunk) {
    const std::size_t end = std::min(N, begin + chunk);
    const Tensor pred = predict(spec, params, gather(test, order, begin, end, false));
    for (std::size_t r = begin; r < end; ++r) {
      const auto& target = test.pairs[r].output.values;
      double s = 0.0;
      for (std::size_t j = 0; j < P; ++j) {
        const double d = pred.at(r - begin, j) - target[j];
        s += d * d;
      }
      total += s / static_cast<double>(P);
    }
  }
  return total / static_cast<double>(N);
}

void RunReport::validate() const {
  if (test_sets.empty()) throw ContractError("report lists no test sets");
  for (std::size_t i = 0; i < test_sets.size(); ++i)
    for (std::size_t j = i + 1; j < test_sets.size(); ++j)
      if (test_sets[i] == test_sets[j]) throw ContractError("report lists a test set twice");
  for (const RunRecord& r : runs) {
    const std::string cell = to_string(r.model) + "/" + to_string(r.augmentation);
    if (r.mse.size() != test_sets.size())
      throw ContractError("run " + cell + " has " + std::to_string(r.mse.size()) + " test results, expected " +
                          std::to_string(test_sets.size()));
    for (std::size_t i = 0; i < test_sets.size(); ++i)
      if (!(r.mse[i].first == test_sets[i]))
        throw ContractError("run " + cell + " is missing test set " + std::to_string(i));
  }
}

}  // namespace pgda
