#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pointaugment/geometry.hpp"
#include "pointaugment/netblocks.hpp"

namespace pointaugment {

struct ClassifierOutput {
  std::vector<double> logits;          // K entries
  std::vector<double> global_feature;  // pooled feature before the head
};

/// Intermediates retained by a traced forward pass. Implementations extend it.
struct ClassifierTrace {
  virtual ~ClassifierTrace() = default;
  ClassifierOutput output;
};

/// A point-cloud classifier exposing logits and a permutation-invariant
/// global feature. Parameters are held externally in a ParameterSet.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual ParameterSet initialize(Rng& rng) const = 0;

  virtual ClassifierOutput forward(const ParameterSet& params, const PointCloud& cloud) const = 0;
  virtual std::unique_ptr<ClassifierTrace> forward_traced(const ParameterSet& params,
                                                          const PointCloud& cloud) const = 0;

  /// d_logits and d_feature are gradients of a scalar w.r.t. the two outputs
  /// (d_feature may be empty). Parameter gradients accumulate into grad when
  /// non-empty; d_input receives the gradient w.r.t. the points when non-null.
  virtual void backward(const ParameterSet& params, const ClassifierTrace& trace,
                        std::span<const double> d_logits, std::span<const double> d_feature,
                        std::span<double> grad, Matrix* d_input) const = 0;
};

struct PointNetConfig {
  std::size_t num_classes = 4;
  std::vector<std::size_t> point_hidden{64, 128};
  std::size_t global_dim = 128;
  std::vector<std::size_t> head_hidden{64};
  /// Instance normalization in the point MLP (see MlpSpec::normalize).
  bool feature_norm = false;

  friend bool operator==(const PointNetConfig&, const PointNetConfig&) = default;
};

/// Shared per-point MLP -> max pool -> FC head.
class PointNetClassifier final : public Classifier {
 public:
  explicit PointNetClassifier(PointNetConfig config);

  const PointNetConfig& config() const { return config_; }
  const Mlp& point_mlp() const { return point_mlp_; }
  const Mlp& head() const { return head_; }

  std::size_t num_classes() const override { return config_.num_classes; }
  std::size_t feature_dim() const override { return config_.global_dim; }
  std::size_t parameter_count() const override { return head_.end_offset(); }
  ParameterSet initialize(Rng& rng) const override;

  ClassifierOutput forward(const ParameterSet& params, const PointCloud& cloud) const override;
  std::unique_ptr<ClassifierTrace> forward_traced(const ParameterSet& params,
                                                  const PointCloud& cloud) const override;
  void backward(const ParameterSet& params, const ClassifierTrace& trace,
                std::span<const double> d_logits, std::span<const double> d_feature,
                std::span<double> grad, Matrix* d_input) const override;

 private:
  PointNetConfig config_;
  Mlp point_mlp_;
  Mlp head_;
};

/// Numerically stable softmax (max-shifted).
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

std::size_t predict(const Classifier& classifier, const ParameterSet& params,
                    const PointCloud& cloud);

}  // namespace pointaugment
