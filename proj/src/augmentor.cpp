#include "pointaugment/augmentor.hpp"

#include <algorithm>
#include <string>

#include "pointaugment/errors.hpp"

namespace pointaugment {

namespace {

MlpSpec make_spec(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                  bool final_activation) {
  MlpSpec s{{in}, final_activation};
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(out);
  return s;
}

// Concatenates [F | G repeated per row | Z].
Matrix displacement_input(const PerPointFeatures& f, const ShapeFeature& g, const Matrix& noise) {
  const std::size_t n = f.rows();
  const std::size_t c = f.cols();
  if (noise.rows() != n || noise.cols() != c || g.values.size() != c) {
    throw ConfigError("displacement regression: feature/noise dimensions disagree");
  }
  Matrix x(n, 3 * c);
  for (std::size_t i = 0; i < n; ++i) {
    double* r = x.row(i).data();
    std::copy_n(f.row(i).data(), c, r);
    std::copy_n(g.values.data(), c, r + c);
    std::copy_n(noise.row(i).data(), c, r + 2 * c);
  }
  return x;
}

Matrix transform_input(const ShapeFeature& g, std::span<const double> noise) {
  const std::size_t c = g.values.size();
  if (noise.size() != c) throw ConfigError("shape-wise regression: noise length must equal C");
  Matrix x(1, 2 * c);
  std::copy_n(g.values.data(), c, x.data());
  std::copy_n(noise.data(), c, x.data() + c);
  return x;
}

}  // namespace

void AugmentorConfig::validate() const {
  if (feature_channels == 0) throw ConfigError("feature_channels must be positive");
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
    throw ConfigError("dropout_prob must lie in [0, 1]");
  }
  if (!(noise_std > 0.0)) throw ConfigError("noise_std must be positive");
}

Augmentor::Augmentor(AugmentorConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t c = config_.feature_channels;
  features_ = Mlp(make_spec(3, config_.feature_hidden, c, true), 0);
  transform_ = Mlp(make_spec(2 * c, config_.transform_hidden, 9, false), features_.end_offset());
  displacement_ =
      Mlp(make_spec(3 * c, config_.displacement_hidden, 3, false), transform_.end_offset());
}

ParameterSet Augmentor::initialize(Rng& rng) const {
  ParameterSet p{std::vector<double>(parameter_count())};
  std::span<double> v = p.values;
  features_.initialize(v, rng);
  transform_.initialize(v, rng);
  displacement_.initialize(v, rng);

  // Last layers start at zero so that M = I and D = 0 for any input and noise.
  const std::size_t last_t = transform_.layer_count() - 1;
  std::ranges::fill(transform_.weight(v, last_t), 0.0);
  auto tb = transform_.bias(v, last_t);
  std::ranges::fill(tb, 0.0);
  tb[0] = tb[4] = tb[8] = 1.0;
  const std::size_t last_d = displacement_.layer_count() - 1;
  std::ranges::fill(displacement_.weight(v, last_d), 0.0);
  std::ranges::fill(displacement_.bias(v, last_d), 0.0);
  return p;
}

std::pair<PerPointFeatures, ShapeFeature> Augmentor::extract_features(
    const ParameterSet& params, const PointCloud& cloud) const {
  PerPointFeatures f = features_.forward(params.values, cloud.points());
  ShapeFeature g = max_pool_points(f);
  return {std::move(f), std::move(g)};
}

Matrix Augmentor::regress_shape_transform(const ParameterSet& params,
                                          const ShapeFeature& shape_feature,
                                          std::span<const double> noise) const {
  Matrix out = transform_.forward(params.values, transform_input(shape_feature, noise));
  return Matrix(3, 3, std::vector<double>(out.values().begin(), out.values().end()));
}

Matrix Augmentor::regress_displacement(const ParameterSet& params,
                                       const PerPointFeatures& features,
                                       const ShapeFeature& shape_feature,
                                       const Matrix& noise) const {
  return displacement_.forward(params.values, displacement_input(features, shape_feature, noise));
}

AugmentorDraw Augmentor::draw(Rng& rng, std::size_t n_points, bool training) const {
  AugmentorDraw d;
  d.drop_transform = !config_.use_transform;
  d.drop_displacement = !config_.use_displacement;
  if (training) {
    const bool drop_m = rng.bernoulli(config_.dropout_prob);
    const bool drop_d = rng.bernoulli(config_.dropout_prob);
    d.drop_transform = d.drop_transform || drop_m;
    d.drop_displacement = d.drop_displacement || drop_d;
  }
  const std::size_t c = config_.feature_channels;
  if (!d.drop_transform) {
    d.shape_noise.resize(c);
    rng.fill_normal(d.shape_noise, 0.0, config_.noise_std);
  }
  if (!d.drop_displacement) {
    d.point_noise = Matrix(n_points, c);
    rng.fill_normal(d.point_noise.values(), 0.0, config_.noise_std);
  }
  return d;
}

AugmentorOutput Augmentor::augment(const ParameterSet& params, const PointCloud& cloud,
                                   const AugmentorDraw& draw, AugmentorTrace* trace) const {
  if (params.size() != parameter_count()) throw ConfigError("augmentor parameter count mismatch");
  AugmentorOutput out;
  out.dropped_transform = draw.drop_transform;
  out.dropped_displacement = draw.drop_displacement;
  out.augmentation = AffineAugmentation::identity(cloud.size());
  if (draw.drop_transform && draw.drop_displacement) {
    out.augmented = cloud;
    return out;
  }

  MlpTrace* ft = trace ? &trace->features : nullptr;
  PerPointFeatures f = features_.forward(params.values, cloud.points(), ft);
  ShapeFeature g = max_pool_points(f);

  if (!draw.drop_transform) {
    Matrix m = transform_.forward(params.values, transform_input(g, draw.shape_noise),
                                  trace ? &trace->transform : nullptr);
    out.augmentation.shape_transform =
        Matrix(3, 3, std::vector<double>(m.values().begin(), m.values().end()));
  }
  if (!draw.drop_displacement) {
    if (draw.point_noise.rows() != cloud.size()) {
      throw ConfigError("point noise rows (" + std::to_string(draw.point_noise.rows()) +
                        ") must equal the number of points");
    }
    out.augmentation.displacement =
        displacement_.forward(params.values, displacement_input(f, g, draw.point_noise),
                              trace ? &trace->displacement : nullptr);
  }
  if (trace) trace->pooled = std::move(g);
  out.augmented = apply_affine(cloud, out.augmentation);
  return out;
}

AugmentorOutput Augmentor::augment(const ParameterSet& params, const PointCloud& cloud, Rng& rng,
                                   bool training) const {
  return augment(params, cloud, draw(rng, cloud.size(), training));
}

void Augmentor::backward(const ParameterSet& params, const PointCloud& cloud,
                         const AugmentorDraw& draw, const AugmentorTrace& trace,
                         const Matrix& d_augmented, std::span<double> grad) const {
  if (draw.drop_transform && draw.drop_displacement) return;
  if (d_augmented.rows() != cloud.size() || d_augmented.cols() != 3) {
    throw ConfigError("augmentor backward: gradient shape must be N x 3");
  }
  const std::size_t n = cloud.size();
  const std::size_t c = config_.feature_channels;
  std::vector<double> d_shape(c, 0.0);
  Matrix d_features(n, c);

  if (!draw.drop_transform) {
    // dL/dM = P^T * dL/dP'
    Matrix dm(1, 9);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < 3; ++r) {
        const double p = cloud(i, r);
        for (std::size_t col = 0; col < 3; ++col) dm(0, 3 * r + col) += p * d_augmented(i, col);
      }
    }
    Matrix d_in;
    transform_.backward(params.values, trace.transform, std::move(dm), grad, &d_in);
    for (std::size_t k = 0; k < c; ++k) d_shape[k] += d_in(0, k);
  }
  if (!draw.drop_displacement) {
    Matrix d_in;
    displacement_.backward(params.values, trace.displacement, d_augmented, grad, &d_in);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c; ++k) {
        d_features(i, k) += d_in(i, k);
        d_shape[k] += d_in(i, c + k);
      }
    }
  }
  max_pool_backward(trace.pooled, d_shape, d_features);
  features_.backward(params.values, trace.features, std::move(d_features), grad, nullptr);
}

}  // namespace pointaugment
