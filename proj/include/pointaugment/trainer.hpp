#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pointaugment/augmentor.hpp"
#include "pointaugment/classifier.hpp"
#include "pointaugment/config.hpp"
#include "pointaugment/dataio.hpp"
#include "pointaugment/losses.hpp"
#include "pointaugment/optimizer.hpp"

namespace pointaugment {

/// Most recent augmented cloud per training sample id.
class ReplayPool {
 public:
  ReplayPool() = default;
  explicit ReplayPool(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  const PointCloud* find(const std::string& id) const;
  /// Inserts or overwrites. Throws ConfigError when a new id would exceed capacity.
  void put(const std::string& id, PointCloud cloud);
  const std::map<std::string, PointCloud>& entries() const { return entries_; }

  friend bool operator==(const ReplayPool&, const ReplayPool&) = default;

 private:
  std::size_t capacity_ = 0;
  std::map<std::string, PointCloud> entries_;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based index of the completed epoch
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double augmentor_loss = 0.0;
  double classifier_loss = 0.0;
  double rho = 0.0;
  double xi = 0.0;
  double feature_gap = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Tab-separated, header row then one row per epoch. Values are written in
/// shortest round-trip form so identical runs produce identical bytes.
void write_metrics_tsv(std::ostream& os, std::span<const EpochMetrics> rows);
std::string metrics_tsv_header();

struct TrainingState {
  TrainConfig config;
  std::size_t num_classes = 0;
  std::size_t epoch = 0;  // completed epochs
  ParameterSet augmentor;
  ParameterSet classifier;
  OptimizerState augmentor_optimizer;
  OptimizerState classifier_optimizer;
  Rng rng;
  ReplayPool pool;
  std::vector<EpochMetrics> history;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

/// One slot of a classifier batch. `input` is either the original cloud or a
/// previously augmented version of the same sample taken from the replay pool.
struct MixedEntry {
  std::size_t sample = 0;  // index into the training samples
  const PointCloud* input = nullptr;
  bool replayed = false;
};

/// Half the slots (chosen at random) take the sample's replay entry, falling
/// back to the original when the pool has none. Throws ConfigError when the
/// batch size is odd.
std::vector<MixedEntry> build_mixed_batch(const ReplayPool& pool, std::span<const Sample> train,
                                          std::span<const std::size_t> batch, Rng& rng);

/// Gradient of a batch-mean objective together with the mean loss terms.
struct BatchGradient {
  std::vector<double> grad;
  LossReport report;  // batch means
  std::size_t correct = 0;
};

/// Alternating optimization of augmentor and classifier over a dataset's
/// train split, with per-epoch evaluation on its test split.
class Trainer {
 public:
  Trainer(const Dataset& dataset, TrainConfig config);
  /// Resumes from a saved state. The dataset must be the one it was trained on.
  Trainer(const Dataset& dataset, TrainingState state);

  const TrainingState& state() const { return state_; }
  TrainingState& state() { return state_; }
  const Augmentor& augmentor() const { return augmentor_; }
  const PointNetClassifier& classifier() const { return classifier_; }
  std::span<const Sample> train_samples() const { return train_; }
  std::span<const Sample> test_samples() const { return test_; }

  EpochMetrics run_epoch();
  /// Runs until state().epoch == epochs, calling on_epoch after each.
  void run(std::size_t epochs, const std::function<void(const TrainingState&)>& on_epoch = {});

  // Alternating-step building blocks, exposed for testing.

  /// Draws per-sample augmentor randomness for a batch.
  std::vector<AugmentorDraw> draw_batch(std::span<const std::size_t> batch);

  /// Gradient of the batch-mean augmentor loss w.r.t. augmentor parameters,
  /// with the classifier held fixed. Inputs are the original samples.
  BatchGradient augmentor_gradient(std::span<const std::size_t> batch,
                                   std::span<const AugmentorDraw> draws) const;

  /// Gradient of the batch-mean classifier loss. P' is regenerated from the
  /// original samples with the current augmentor and the given draws; the
  /// other input comes from the (possibly mixed) entries. Augmented clouds
  /// are returned through augmented when non-null.
  BatchGradient classifier_gradient(std::span<const MixedEntry> entries,
                                    std::span<const AugmentorDraw> draws,
                                    std::vector<PointCloud>* augmented = nullptr) const;

  /// Cross entropy on classifier inputs transformed by the baseline DA (or
  /// untouched in NoAugmentation mode).
  BatchGradient baseline_gradient(std::span<const PointCloud> inputs,
                                  std::span<const std::size_t> labels) const;

  /// One optimizer step on the augmentor. Classifier state is untouched.
  LossReport augmentor_step(std::span<const std::size_t> batch,
                            std::span<const AugmentorDraw> draws, double lr);
  /// One optimizer step on the classifier; updates the replay pool with the
  /// regenerated P'. Augmentor state is untouched.
  LossReport classifier_step(std::span<const MixedEntry> entries,
                             std::span<const AugmentorDraw> draws, double lr,
                             std::size_t* correct = nullptr);

 private:
  void init_views(const Dataset& dataset);

  TrainingState state_;
  Augmentor augmentor_;
  PointNetClassifier classifier_;
  std::vector<Sample> train_;
  std::vector<Sample> test_;
};

/// Fresh training run of config.epochs epochs.
TrainingState train(const Dataset& dataset, const TrainConfig& config);

}  // namespace pointaugment
