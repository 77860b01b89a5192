#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pointaugment/geometry.hpp"
#include "pointaugment/netblocks.hpp"

namespace pointaugment {

struct AugmentorConfig {
  std::size_t feature_channels = 64;                  // C
  std::vector<std::size_t> feature_hidden{64};        // 3 -> hidden... -> C
  std::vector<std::size_t> transform_hidden{256, 128};     // 2C -> hidden... -> 9
  std::vector<std::size_t> displacement_hidden{256, 128};  // 3C -> hidden... -> 3
  double noise_std = 1.0;
  double dropout_prob = 0.5;
  bool use_transform = true;     // false pins M to the identity
  bool use_displacement = true;  // false pins D to zero

  void validate() const;
  friend bool operator==(const AugmentorConfig&, const AugmentorConfig&) = default;
};

/// Random inputs for one augment() call: Gaussian noise for the two heads and
/// the dropout decisions. Kept separately so a sample can be re-augmented
/// with the same randomness after a parameter update.
struct AugmentorDraw {
  std::vector<double> shape_noise;  // C, empty when M is dropped
  Matrix point_noise;               // N x C, empty when D is dropped
  bool drop_transform = false;
  bool drop_displacement = false;
};

struct AugmentorOutput {
  AffineAugmentation augmentation;  // effective M and D after dropout
  PointCloud augmented;
  bool dropped_transform = false;
  bool dropped_displacement = false;
};

struct AugmentorTrace {
  MlpTrace features;
  ShapeFeature pooled;
  MlpTrace transform;
  MlpTrace displacement;
};

/// Sample-aware augmentation network: per-point features F and their max-pooled
/// shape feature G drive two regressors. The shape-wise head maps [G | z] to a
/// 3x3 transform M; the point-wise head maps [F | G repeated | Z] to an N x 3
/// displacement D. Output is P * M + D. Freshly initialized parameters regress
/// M = I and D = 0 exactly.
class Augmentor {
 public:
  explicit Augmentor(AugmentorConfig config);

  const AugmentorConfig& config() const { return config_; }
  const Mlp& feature_mlp() const { return features_; }
  const Mlp& transform_head() const { return transform_; }
  const Mlp& displacement_head() const { return displacement_; }
  std::size_t parameter_count() const { return displacement_.end_offset(); }

  ParameterSet initialize(Rng& rng) const;

  std::pair<PerPointFeatures, ShapeFeature> extract_features(const ParameterSet& params,
                                                             const PointCloud& cloud) const;
  Matrix regress_shape_transform(const ParameterSet& params, const ShapeFeature& shape_feature,
                                 std::span<const double> noise) const;
  Matrix regress_displacement(const ParameterSet& params, const PerPointFeatures& features,
                              const ShapeFeature& shape_feature, const Matrix& noise) const;

  /// Dropout is only drawn when training; use_transform/use_displacement
  /// switched off force the corresponding component to be dropped.
  AugmentorDraw draw(Rng& rng, std::size_t n_points, bool training) const;

  AugmentorOutput augment(const ParameterSet& params, const PointCloud& cloud,
                          const AugmentorDraw& draw, AugmentorTrace* trace = nullptr) const;
  AugmentorOutput augment(const ParameterSet& params, const PointCloud& cloud, Rng& rng,
                          bool training) const;

  /// Accumulates into grad the gradient of a scalar whose gradient w.r.t. the
  /// augmented points is d_augmented.
  void backward(const ParameterSet& params, const PointCloud& cloud, const AugmentorDraw& draw,
                const AugmentorTrace& trace, const Matrix& d_augmented,
                std::span<double> grad) const;

 private:
  AugmentorConfig config_;
  Mlp features_;
  Mlp transform_;
  Mlp displacement_;
};

}  // namespace pointaugment
