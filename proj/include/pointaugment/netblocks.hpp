#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pointaugment/matrix.hpp"
#include "pointaugment/random.hpp"

namespace pointaugment {

/// Flat parameter storage for one network. Layers address it by offset.
struct ParameterSet {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// FNV-1a over the raw bytes; equal hashes mean bit-identical parameters.
  std::uint64_t hash() const;
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);

using PerPointFeatures = Matrix;

/// Channel-wise max over points plus the row that produced each maximum.
struct ShapeFeature {
  std::vector<double> values;
  std::vector<std::size_t> argmax;
};

/// Layer widths including input and output, e.g. {3, 64, 128}. Hidden layers
/// use ReLU; the last layer does too when final_activation is set.
struct MlpSpec {
  std::vector<std::size_t> widths;
  bool final_activation = false;
  /// Instance normalization before every ReLU: each channel is standardized
  /// over the rows of one input, then scaled and shifted by learned
  /// per-channel gain (init 1) and shift (init 0).
  bool normalize = false;
};

inline constexpr double kNormEpsilon = 1e-5;

/// Per-layer activations kept for the backward pass. activations[0] is the
/// input, activations[l + 1] the (post-nonlinearity) output of layer l.
struct MlpTrace {
  std::vector<Matrix> activations;
  std::vector<Matrix> normalized;             // standardized pre-activations, per layer
  std::vector<std::vector<double>> inv_std;   // per layer, per channel
};

/// Stack of dense layers applied identically to every row of its input.
/// Rows are points for a shared per-point MLP, or a single row for a fully
/// connected head. The object holds only the layout; weights live in a
/// ParameterSet starting at offset().
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::size_t offset);

  const MlpSpec& spec() const { return spec_; }
  std::size_t in_width() const { return spec_.widths.front(); }
  std::size_t out_width() const { return spec_.widths.back(); }
  std::size_t layer_count() const { return spec_.widths.size() - 1; }
  std::size_t offset() const { return offset_; }
  std::size_t parameter_count() const { return count_; }
  std::size_t end_offset() const { return offset_ + count_; }

  std::span<const double> weight(std::span<const double> params, std::size_t layer) const;
  std::span<const double> bias(std::span<const double> params, std::size_t layer) const;
  std::span<double> weight(std::span<double> params, std::size_t layer) const;
  std::span<double> bias(std::span<double> params, std::size_t layer) const;
  /// True when layer l is followed by ReLU (and so normalized if enabled).
  bool activated(std::size_t layer) const;
  bool normalized(std::size_t layer) const { return spec_.normalize && activated(layer); }
  /// Normalization parameters; only valid for normalized layers.
  std::span<const double> gain(std::span<const double> params, std::size_t layer) const;
  std::span<const double> shift(std::span<const double> params, std::size_t layer) const;
  std::span<double> gain(std::span<double> params, std::size_t layer) const;
  std::span<double> shift(std::span<double> params, std::size_t layer) const;

  /// Uniform fan-in scaled weights, zero biases, unit gains, zero shifts.
  void initialize(std::span<double> params, Rng& rng) const;

  Matrix forward(std::span<const double> params, const Matrix& x, MlpTrace* trace = nullptr) const;

  /// Backpropagates dy (gradient w.r.t. the output). Parameter gradients are
  /// accumulated into grad when it is non-empty; dx receives the input
  /// gradient when non-null.
  void backward(std::span<const double> params, const MlpTrace& trace, Matrix dy,
                std::span<double> grad, Matrix* dx) const;

 private:
  MlpSpec spec_;
  std::size_t offset_ = 0;
  std::size_t count_ = 0;
  std::vector<std::size_t> layer_offsets_;
};

PerPointFeatures shared_mlp_forward(const Mlp& mlp, std::span<const double> params,
                                    const PerPointFeatures& input);

ShapeFeature max_pool_points(const PerPointFeatures& input);

/// Routes each channel's gradient to the row that won the max.
void max_pool_backward(const ShapeFeature& pooled, std::span<const double> d_pooled,
                       PerPointFeatures& d_input);

std::vector<double> fc_head_forward(const Mlp& mlp, std::span<const double> params,
                                    std::span<const double> input);

}  // namespace pointaugment
