#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pointaugment/geometry.hpp"
#include "pointaugment/random.hpp"

namespace pointaugment {

enum class Split { Train, Test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct Sample {
  std::string id;
  PointCloud cloud;
  std::size_t label = 0;
  Split split = Split::Train;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t count(Split split) const;
  /// Copies of the samples tagged with the given split, in dataset order.
  std::vector<Sample> subset(Split split) const;
  /// Checks labels, id uniqueness and a common point count.
  void validate() const;
};

/// On-disk layout:
///   classes.txt          one class name per line, line index = class id
///   manifest.tsv         header "sample_id\tsplit\tclass", one row per sample
///   points/<id>.xyz      "x y z" per line, no header
/// Each cloud is resampled to exactly n_points (random subset when larger,
/// originals plus draws with replacement when smaller) and then normalized to
/// the unit ball. Throws LoadError naming the offending entry.
Dataset load_dataset(const std::filesystem::path& root, std::size_t n_points,
                     std::uint64_t seed);

/// Writes the layout above. Coordinates use the shortest round-trip decimal form.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

PointCloud resample_points(const PointCloud& cloud, std::size_t n_points, Rng& rng);

enum class Primitive { Sphere, Cube, Cylinder, Cone };

Primitive parse_primitive(const std::string& name);
std::string to_string(Primitive p);

/// Area-uniform samples on the unit primitive surface (radius / half-extent 1,
/// axis along y), before any deformation or normalization.
PointCloud sample_primitive_surface(Primitive p, std::size_t n_points, Rng& rng);

struct SynthConfig {
  std::vector<std::string> classes{"sphere", "cube", "cylinder", "cone"};
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  /// Optional per-class train counts for imbalanced sets; overrides train_per_class.
  std::vector<std::size_t> train_counts;
  std::size_t n_points = 256;
  /// Scales both the per-axis stretch range (1 +- 0.3) and the jitter (0.02).
  double deformation = 1.0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Deterministic under seed. Clouds are unit-ball normalized.
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

/// Stratified re-split. Classes with fewer than two samples go entirely to
/// train and produce a warning.
Dataset split(const Dataset& dataset, double train_fraction, std::uint64_t seed,
              std::vector<std::string>* warnings = nullptr);

/// Stable 64-bit seed derived from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pointaugment
