#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pointaugment/augmentor.hpp"
#include "pointaugment/classifier.hpp"
#include "pointaugment/dataio.hpp"
#include "pointaugment/geometry.hpp"
#include "pointaugment/losses.hpp"
#include "pointaugment/optimizer.hpp"

namespace pointaugment {

/// PointAugment trains augmentor and classifier jointly. The two baseline
/// modes train the classifier alone, on raw samples or with conventional DA.
enum class TrainingMode { PointAugment, NoAugmentation, Conventional };

/// Bounded is the rho-bounded loss with the fidelity term; Naive is
/// exp(-(L(P') - L(P))) and exists for the stability comparison.
enum class AugmentorObjective { Bounded, Naive };

struct TrainConfig {
  std::size_t epochs = 250;
  std::size_t batch_size = 24;
  double augmentor_lr = 0.001;
  double classifier_lr = 0.001;
  double lr_decay_rate = 0.5;
  std::size_t lr_decay_every = 20;
  /// The classifier follows the step decay; the augmentor keeps a constant rate unless set.
  bool augmentor_lr_decay = false;
  LossWeights weights;
  bool mixed_sampling = true;
  std::uint64_t seed = 1;
  TrainingMode mode = TrainingMode::PointAugment;
  AugmentorObjective objective = AugmentorObjective::Bounded;
  /// sgd selects momentum 0.9 with cosine annealing.
  OptimizerKind classifier_optimizer = OptimizerKind::Adam;
  AugmentorConfig augmentor;
  PointNetConfig classifier;  // num_classes is taken from the dataset
  ConventionalDAParams conventional;

  void validate() const;
  double classifier_lr_at(std::size_t epoch) const;
  double augmentor_lr_at(std::size_t epoch) const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Everything the command-line tool reads from a config file.
struct RunConfig {
  TrainConfig train;
  std::size_t n_points = 1024;  // resampling target when loading a dataset
  double robustness_jitter_sigma = 0.01;
  double robustness_jitter_clip = 0.05;
  SynthConfig synth;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses `key = value` lines. '#' starts a comment; blank lines are ignored.
/// Unknown keys and malformed values throw ConfigError naming the line.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Every key in a fixed order; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Applies a single `key = value` assignment.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

std::vector<std::string> config_keys();

/// Small networks and a 30-epoch schedule sized for a single CPU core on the
/// 4-class synthetic benchmark (N = 256). configs/desk.cfg holds the same values.
RunConfig desk_scale_config();

std::string to_string(TrainingMode mode);
std::string to_string(AugmentorObjective objective);
TrainingMode parse_training_mode(const std::string& text);

}  // namespace pointaugment
