// SPDX-License-Identifier: Apache-2.0
// Command-line driver: gen, augment, train, eval, reproduce.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pgda/datastore.hpp"
#include "pgda/error.hpp"
#include "pgda/experiment.hpp"
#include "pgda/parallel.hpp"

namespace fs = std::filesystem;
using namespace pgda;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAcceptance = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

ExperimentConfig resolve_config(const Globals& g, const std::string& task) {
  ExperimentConfig c;
  if (!g.config.empty()) {
    c = load_experiment_config(g.config);
    if (!task.empty() && task != c.task)
      throw ParameterError("--task " + task + " conflicts with task " + c.task + " in " + g.config);
  } else {
    c = preset(task.empty() ? "antiderivative" : task);
  }
  if (g.seed) c.seed = *g.seed;
  c.validate();
  return c;
}

std::string task_for(EquationKind k) {
  switch (k) {
    case EquationKind::Poisson2D:
      return "poisson";
    case EquationKind::SingularAdvDiff:
      return "spadvdiff";
    default:
      return "antiderivative";
  }
}

PipelineOptions pipeline_options(const Globals& g) {
  PipelineOptions opt;
  opt.threads = thread_count();
  if (!g.quiet) opt.log = [](const std::string& s) { std::cerr << s << std::endl; };
  return opt;
}

fs::path out_dir(const Globals& g, const fs::path& fallback) { return g.out.empty() ? fallback : fs::path(g.out); }

void note(const Globals& g, const std::string& s) {
  if (!g.quiet) std::cerr << s << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-guided data augmentation for neural operators"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON); defaults to the task preset")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed overriding the config");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  std::string task;
  auto* gen = app.add_subcommand("gen", "Generate the training set and the test sets");
  gen->add_option("--task", task, "Preset when no --config is given")->check(CLI::IsMember(preset_names()));

  std::string ds_path, mode = "combined";
  std::optional<std::size_t> multiplier;
  auto* aug = app.add_subcommand("augment", "Apply physics-guided augmentation to a dataset");
  aug->add_option("dataset", ds_path, "Dataset manifest (.json)")->required()->check(CLI::ExistingFile);
  aug->add_option("--mode", mode, "none, linear, translate or combined")
      ->check(CLI::IsMember({"none", "linear", "translate", "combined"}));
  aug->add_option("--multiplier", multiplier, "Augmented pairs per original pair")->check(CLI::PositiveNumber);

  std::string model;
  auto* train = app.add_subcommand("train", "Train a model on a dataset and write a checkpoint");
  train->add_option("dataset", ds_path, "Training dataset manifest (.json)")->required()->check(CLI::ExistingFile);
  train->add_option("--model", model, "deeponet or fno (default from the config)")
      ->check(CLI::IsMember({"deeponet", "fno"}));

  std::string ckpt;
  std::vector<std::string> tests;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on test sets");
  eval->add_option("checkpoint", ckpt, "Checkpoint manifest (.json)")->required()->check(CLI::ExistingFile);
  eval->add_option("tests", tests, "Test dataset manifests")->required()->check(CLI::ExistingFile);

  auto* repro = app.add_subcommand("reproduce", "Full pipeline with the acceptance summary");
  repro->add_option("--task", task, "Preset when no --config is given")->check(CLI::IsMember(preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      const ExperimentConfig c = resolve_config(g, task);
      const fs::path out = out_dir(g, fs::path(c.output_dir) / "data");
      note(g, "generating " + c.task + " data into " + out.string());
      const GeneratedData data = generate_data(c, thread_count());
      save_dataset(data.train, out / "train.json");
      for (std::size_t i = 0; i < data.tests.size(); ++i)
        save_dataset(data.tests[i], out / (test_set_name(c.test_sets[i]) + ".json"));
      std::cout << (out / "train.json").string() << "\n";
      for (const auto& k : c.test_sets) std::cout << (out / (test_set_name(k) + ".json")).string() << "\n";
    } else if (*aug) {
      const Dataset d = load_dataset(ds_path);
      ExperimentConfig c = resolve_config(g, g.config.empty() ? task_for(d.equation.kind) : "");
      if (multiplier) c.augment.multiplier = *multiplier;
      const AugmentMode m = augment_mode_from_string(mode);
      const Dataset a = augment_train(c, d, m);
      const fs::path out = out_dir(g, fs::path(ds_path).parent_path()) / ("train_" + mode + ".json");
      save_dataset(a, out);
      note(g, std::to_string(d.size()) + " -> " + std::to_string(a.size()) + " pairs");
      std::cout << out.string() << "\n";
    } else if (*train) {
      const Dataset d = load_dataset(ds_path);
      ExperimentConfig c = resolve_config(g, g.config.empty() ? task_for(d.equation.kind) : "");
      if (!(c.equation == d.equation)) throw ParameterError("dataset equation does not match the config");
      const ModelKind kind = model.empty() ? c.model : model_kind_from_string(model);
      const std::string augmentation = d.augmentation ? to_string(d.augmentation->mode) : "none";
      const fs::path out = out_dir(g, fs::path(c.output_dir) / (to_string(kind) + "_" + augmentation));
      const FitResult fr = train_model(c, kind, d, pipeline_options(g));
      save_checkpoint(model_spec(c, kind), fr.params, out / "checkpoint.json",
                      {{"task", c.task}, {"augmentation", augmentation}, {"fingerprint", config_fingerprint(c)}});
      write_file_atomic(out / "loss.csv", loss_csv(fr));
      std::cout << (out / "checkpoint.json").string() << "\n";
    } else if (*eval) {
      const Checkpoint ck = load_checkpoint(ckpt);
      RunReport r;
      r.task = ck.tags.count("task") ? ck.tags.at("task") : "unknown";
      r.fingerprint = ck.tags.count("fingerprint") ? ck.tags.at("fingerprint") : "";
      RunRecord rec;
      rec.model = ck.spec.kind;
      rec.augmentation = augment_mode_from_string(ck.tags.count("augmentation") ? ck.tags.at("augmentation") : "none");
      for (const std::string& path : tests) {
        const Dataset d = load_dataset(path);
        const TestSetKey key{d.grf.mean, d.grf.length_scale};
        r.test_sets.push_back(key);
        rec.mse.emplace_back(key, evaluate(ck.spec, ck.params, d));
      }
      r.runs.push_back(rec);
      std::cout << report_csv(r);
      if (!g.out.empty()) save_report(r, fs::path(g.out) / "report");
    } else if (*repro) {
      const ExperimentConfig c = resolve_config(g, task);
      const fs::path out = out_dir(g, c.output_dir);
      const ReproduceResult res = reproduce(c, out, pipeline_options(g));
      std::cout << report_csv(res.report);
      for (const Check& ch : res.checks) std::cout << format_check(ch) << "\n";
      std::cout << (res.passed() ? "OVERALL PASS" : "OVERALL FAIL") << "\n";
      if (!res.passed()) return kExitAcceptance;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
