#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pointaugment/checkpoint.hpp"
#include "pointaugment/config.hpp"
#include "pointaugment/dataio.hpp"
#include "pointaugment/errors.hpp"
#include "pointaugment/evaluator.hpp"
#include "pointaugment/trainer.hpp"

namespace fs = std::filesystem;
using namespace pointaugment;

namespace {

struct Common {
  std::string data;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
};

RunConfig load_run_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_config_file(c.config);
  if (c.seed) rc.train.seed = *c.seed;
  return rc;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_output(path);
  os << text;
}

Dataset load_for(const RunConfig& rc, const std::string& dir) {
  return load_dataset(dir, rc.n_points, rc.train.seed);
}

/// Restores the classifier from a checkpoint.
struct LoadedModel {
  TrainingState state;
  PointNetClassifier classifier;
};

LoadedModel load_model(const std::string& path) {
  TrainingState s = load_checkpoint(path);
  PointNetConfig pc = s.config.classifier;
  pc.num_classes = s.num_classes;
  PointNetClassifier clf(pc);
  if (clf.parameter_count() != s.classifier.size()) {
    throw LoadError("checkpoint classifier parameters do not match its config");
  }
  return {std::move(s), std::move(clf)};
}

void check_classes(const Dataset& ds, const TrainingState& s) {
  if (ds.num_classes() != s.num_classes) {
    throw InvalidInput("dataset has " + std::to_string(ds.num_classes()) +
                       " classes but the checkpoint was trained on " +
                       std::to_string(s.num_classes));
  }
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch%04zu.bin", epoch);
  return buf;
}

int cmd_train(const Common& c, const std::string& baseline, std::optional<std::size_t> epochs,
              const std::string& resume, std::size_t checkpoint_every) {
  RunConfig rc = load_run_config(c);
  if (!baseline.empty()) {
    if (baseline != "none" && baseline != "conventional") {
      throw ConfigError("--baseline must be none or conventional");
    }
    rc.train.mode = parse_training_mode(baseline);
  }
  std::optional<TrainingState> resumed;
  if (!resume.empty()) {
    resumed = load_checkpoint(resume);
    rc.train = resumed->config;
  }
  if (epochs) rc.train.epochs = *epochs;
  rc.train.validate();

  const Dataset ds = load_for(rc, c.data);
  fs::create_directories(c.out);
  const fs::path out(c.out);
  write_text(out / "config.txt", serialize_config(rc));

  std::optional<Trainer> trainer;
  if (resumed) {
    resumed->config.epochs = rc.train.epochs;
    trainer.emplace(ds, std::move(*resumed));
  } else {
    trainer.emplace(ds, rc.train);
  }
  trainer->run(rc.train.epochs, [&](const TrainingState& s) {
    const EpochMetrics& m = s.history.back();
    std::cout << "epoch " << m.epoch << "/" << rc.train.epochs << " train_acc " << m.train_accuracy
              << " test_acc " << m.test_accuracy << std::endl;
    if (checkpoint_every > 0 && s.epoch % checkpoint_every == 0) {
      save_checkpoint(s, out / checkpoint_name(s.epoch));
    }
  });
  save_checkpoint(trainer->state(), out / "checkpoint.bin");
  auto os = open_output(out / "metrics.tsv");
  write_metrics_tsv(os, trainer->state().history);
  return 0;
}

int cmd_eval(const Common& c, const std::string& ckpt) {
  RunConfig rc = load_run_config(c);
  const LoadedModel m = load_model(ckpt);
  rc.train.seed = c.seed.value_or(m.state.config.seed);
  const Dataset ds = load_for(rc, c.data);
  check_classes(ds, m.state);
  fs::create_directories(c.out);
  auto os = open_output(fs::path(c.out) / "eval.tsv");
  os << "split\tsamples\taccuracy\n";
  for (Split sp : {Split::Train, Split::Test}) {
    const auto subset = ds.subset(sp);
    if (subset.empty()) continue;
    const double acc = classification_accuracy(m.classifier, m.state.classifier, subset);
    os << to_string(sp) << '\t' << subset.size() << '\t' << acc << '\n';
    std::cout << to_string(sp) << " accuracy " << acc << '\n';
  }
  return 0;
}

int cmd_retrieve(const Common& c, const std::string& ckpt) {
  RunConfig rc = load_run_config(c);
  const LoadedModel m = load_model(ckpt);
  rc.train.seed = c.seed.value_or(m.state.config.seed);
  const Dataset ds = load_for(rc, c.data);
  check_classes(ds, m.state);
  const RetrievalResult r =
      retrieval_map(m.classifier, m.state.classifier, ds.subset(Split::Test));
  fs::create_directories(c.out);
  auto os = open_output(fs::path(c.out) / "retrieval.tsv");
  write_retrieval_tsv(os, r);
  std::cout << "mean_ap " << r.mean_ap << " (" << r.query.size() << " queries, "
            << r.skipped_queries << " skipped)\n";
  if (r.degenerate_features > 0) {
    std::cerr << "warning: " << r.degenerate_features << " samples have all-zero features\n";
  }
  return 0;
}

int cmd_robustness(const Common& c, const std::string& ckpt, std::optional<double> sigma,
                   std::optional<double> clip, const std::vector<std::string>& names) {
  RunConfig rc = load_run_config(c);
  const LoadedModel m = load_model(ckpt);
  rc.train.seed = c.seed.value_or(m.state.config.seed);
  const double s = sigma.value_or(rc.robustness_jitter_sigma);
  const double k = clip.value_or(rc.robustness_jitter_clip);
  std::vector<CorruptionSetting> settings;
  if (names.empty()) {
    settings = default_corruptions(s, k);
  } else {
    for (const auto& n : names) settings.push_back(CorruptionSetting::parse(n, s, k));
  }
  const Dataset ds = load_for(rc, c.data);
  check_classes(ds, m.state);
  const auto rows = robustness_suite(m.classifier, m.state.classifier, ds.subset(Split::Test),
                                     settings, rc.train.seed);
  fs::create_directories(c.out);
  auto os = open_output(fs::path(c.out) / "robustness.tsv");
  write_robustness_tsv(os, rows);
  write_robustness_tsv(std::cout, rows);
  return 0;
}

int cmd_ablate(const Common& c, std::optional<std::size_t> epochs,
               const std::vector<std::string>& models, const std::vector<double>& lambdas) {
  RunConfig rc = load_run_config(c);
  if (epochs) rc.train.epochs = *epochs;
  rc.train.validate();
  std::vector<AblationToggles> toggles;
  if (models.empty()) {
    toggles = standard_ablation_models();
  } else {
    for (const auto& m : models) toggles.push_back(AblationToggles::parse(m));
  }
  const Dataset ds = load_for(rc, c.data);
  const auto rows = ablation_runner(ds, rc.train, toggles, lambdas);
  fs::create_directories(c.out);
  auto os = open_output(fs::path(c.out) / "ablation.tsv");
  write_ablation_tsv(os, rows);
  write_ablation_tsv(std::cout, rows);
  return 0;
}

int cmd_gensynth(const Common& c) {
  const RunConfig rc = load_run_config(c);
  const Dataset ds = generate_synthetic(rc.synth, rc.train.seed);
  save_dataset(ds, c.out);
  std::cout << "wrote " << ds.samples.size() << " samples in " << ds.num_classes()
            << " classes to " << c.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PointAugment point-cloud augmentation and classification"};
  app.require_subcommand(1);

  Common common;
  std::string baseline, resume, checkpoint;
  std::optional<std::size_t> epochs;
  std::size_t checkpoint_every = 0;
  std::optional<double> sigma, clip;
  std::vector<std::string> settings, models;
  std::vector<double> lambdas;

  auto add_common = [&](CLI::App* sub, bool needs_data) {
    auto* d = sub->add_option("--data", common.data, "Dataset directory");
    if (needs_data) d->required();
    sub->add_option("--out", common.out, "Output directory")->required();
    sub->add_option("--config", common.config, "key = value config file");
    sub->add_option("--seed", common.seed, "Random seed (overrides the config)");
  };

  auto* train = app.add_subcommand("train", "Train a classifier (PointAugment or a baseline)");
  add_common(train, true);
  train->add_option("--baseline", baseline, "Train without the augmentor: none | conventional")
      ->check(CLI::IsMember({"none", "conventional"}));
  train->add_option("--epochs", epochs, "Total epochs (overrides the config)");
  train->add_option("--resume", resume, "Continue from a checkpoint file");
  train->add_option("--checkpoint-every", checkpoint_every,
                    "Also write checkpoint_epochNNNN.bin every k epochs");

  auto* eval = app.add_subcommand("eval", "Classification accuracy of a checkpoint");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  auto* retrieve = app.add_subcommand("retrieve", "Shape retrieval mAP on the test split");
  add_common(retrieve, true);
  retrieve->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

  auto* robust = app.add_subcommand("robustness", "Accuracy under test-time corruptions");
  add_common(robust, true);
  robust->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  robust->add_option("--jitter-sigma", sigma, "Jitter standard deviation");
  robust->add_option("--jitter-clip", clip, "Jitter clip bound");
  robust->add_option("--settings", settings,
                     "Subset of none, jitter, scale_0.9, scale_1.1, rotate_90, rotate_180");

  auto* ablate = app.add_subcommand("ablate", "Component ablation and lambda sweep");
  add_common(ablate, true);
  ablate->add_option("--epochs", epochs, "Epochs per run (overrides the config)");
  ablate->add_option("--models", models, "Toggle sets such as none, D, D+M+DP+Mix");
  ablate->add_option("--lambdas", lambdas, "Lambda values for the sweep");

  auto* gensynth = app.add_subcommand("gensynth", "Write a synthetic primitive-shape dataset");
  add_common(gensynth, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << failing->help();
    return 2;
  }

  try {
    if (*train) return cmd_train(common, baseline, epochs, resume, checkpoint_every);
    if (*eval) return cmd_eval(common, checkpoint);
    if (*retrieve) return cmd_retrieve(common, checkpoint);
    if (*robust) return cmd_robustness(common, checkpoint, sigma, clip, settings);
    if (*ablate) return cmd_ablate(common, epochs, models, lambdas);
    if (*gensynth) return cmd_gensynth(common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
