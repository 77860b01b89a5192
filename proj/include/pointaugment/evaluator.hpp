#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pointaugment/classifier.hpp"
#include "pointaugment/config.hpp"
#include "pointaugment/dataio.hpp"

namespace pointaugment {

/// Fraction of samples whose prediction matches the label. Samples are
/// classified in parallel. Throws InvalidInput on an empty set.
double classification_accuracy(const Classifier& classifier, const ParameterSet& params,
                               std::span<const Sample> samples);

/// Global features for every sample, in order.
std::vector<std::vector<double>> global_features(const Classifier& classifier,
                                                 const ParameterSet& params,
                                                 std::span<const Sample> samples);

/// Cosine similarity; 0 when either vector is all zeros.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Average precision of a ranked list given per-rank relevance flags.
/// Returns 0 when nothing is relevant.
double average_precision(std::span<const bool> relevant_in_rank_order);

struct RetrievalResult {
  std::vector<std::size_t> query;         // indices of the evaluated queries
  std::vector<double> average_precision;  // one per evaluated query
  double mean_ap = 0.0;
  std::size_t skipped_queries = 0;    // queries with no other same-class sample
  std::size_t degenerate_features = 0;  // all-zero global features
};

/// Each sample queries all others, ranked by descending cosine similarity
/// (ties by ascending index). Throws InvalidInput with fewer than two samples
/// or when every query is skipped.
RetrievalResult retrieval_map(std::span<const std::vector<double>> features,
                              std::span<const std::size_t> labels);
RetrievalResult retrieval_map(const Classifier& classifier, const ParameterSet& params,
                              std::span<const Sample> samples);

enum class CorruptionKind { None, Jitter, Scale09, Scale11, Rotate90, Rotate180 };

struct CorruptionSetting {
  CorruptionKind kind = CorruptionKind::None;
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;

  /// Column label: Ori., Jitt., 0.9, 1.1, 90deg, 180deg.
  std::string label() const;
  /// Accepts none, jitter, scale_0.9, scale_1.1, rotate_90, rotate_180.
  static CorruptionSetting parse(const std::string& name, double sigma = 0.01,
                                 double clip = 0.05);
};

/// The six standard robustness settings: none, jitter, scale 0.9/1.1, rotate 90/180.
std::vector<CorruptionSetting> default_corruptions(double jitter_sigma, double jitter_clip);

PointCloud corrupt(const PointCloud& cloud, const CorruptionSetting& setting, Rng& rng);

struct RobustnessRow {
  std::string setting;
  double accuracy = 0.0;
};

/// Corrupts every sample (no re-normalization) and measures accuracy. The
/// jitter stream of sample i is seeded from (seed, i).
std::vector<RobustnessRow> robustness_suite(const Classifier& classifier,
                                            const ParameterSet& params,
                                            std::span<const Sample> samples,
                                            std::span<const CorruptionSetting> settings,
                                            std::uint64_t seed);

struct AblationToggles {
  bool use_displacement = false;
  bool use_transform = false;
  bool use_dropout = false;
  bool use_mix = false;

  bool any() const { return use_displacement || use_transform || use_dropout || use_mix; }
  /// "none" or '+'-joined names from D, M, DP, Mix.
  std::string label() const;
  static AblationToggles parse(const std::string& text);
  friend bool operator==(const AblationToggles&, const AblationToggles&) = default;
};

/// Standard ablation models A-F: none, D, M, D+M, D+M+DP, D+M+DP+Mix.
std::vector<AblationToggles> standard_ablation_models();

/// Config for one ablation run. All toggles off selects the conventional-DA
/// baseline; otherwise PointAugment with the unused parts pinned.
TrainConfig apply_toggles(const TrainConfig& base, const AblationToggles& toggles);

struct AblationRow {
  std::string label;
  double lambda = 1.0;
  double accuracy = 0.0;  // final-epoch test accuracy
};

/// One full training run per toggle set, then one PointAugment run per
/// lambda value. All runs share base.seed.
std::vector<AblationRow> ablation_runner(const Dataset& dataset, const TrainConfig& base,
                                         std::span<const AblationToggles> toggles,
                                         std::span<const double> lambdas = {});

void write_robustness_tsv(std::ostream& os, std::span<const RobustnessRow> rows);
void write_ablation_tsv(std::ostream& os, std::span<const AblationRow> rows);
void write_retrieval_tsv(std::ostream& os, const RetrievalResult& result);

}  // namespace pointaugment
