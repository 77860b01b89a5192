#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pointaugment/augmentor.hpp"
#include "pointaugment/classifier.hpp"
#include "pointaugment/config.hpp"
#include "pointaugment/dataio.hpp"
#include "pointaugment/geometry.hpp"
#include "pointaugment/random.hpp"

namespace testing {

using namespace pointaugment;

inline PointCloud random_cloud(std::size_t n, Rng& rng, double scale = 1.0) {
  Matrix m(n, 3);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return PointCloud(std::move(m));
}

inline PointCloud permute_rows(const PointCloud& c, std::span<const std::size_t> perm) {
  PointCloud out = c;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) out(i, a) = c(perm[i], a);
  }
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i-- > 1;) std::swap(p[i], p[rng.index(i + 1)]);
  return p;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::max(std::abs(a), std::abs(b)));
}

/// Central difference of f with respect to values[i].
inline double central_difference(std::vector<double>& values, std::size_t i,
                                 const std::function<double()>& f, double h = 1e-5) {
  const double saved = values[i];
  values[i] = saved + h;
  const double up = f();
  values[i] = saved - h;
  const double down = f();
  values[i] = saved;
  return (up - down) / (2.0 * h);
}

/// Tiny augmentor used by gradient and contract tests (C = 8).
inline AugmentorConfig tiny_augmentor_config() {
  AugmentorConfig c;
  c.feature_channels = 8;
  c.feature_hidden = {6};
  c.transform_hidden = {7};
  c.displacement_hidden = {7};
  return c;
}

inline PointNetConfig tiny_classifier_config(std::size_t k = 4) {
  PointNetConfig c;
  c.num_classes = k;
  c.point_hidden = {6};
  c.global_dim = 8;
  c.head_hidden = {5};
  return c;
}

/// Reinitializes every layer, including the identity-initialized heads, so
/// P' differs from P.
inline void randomize_all(std::vector<double>& values, Rng& rng, double scale) {
  for (double& v : values) v = rng.uniform(-scale, scale);
}

/// Small balanced synthetic dataset for fast trainer tests.
inline Dataset tiny_dataset(std::uint64_t seed = 3, std::size_t train_per_class = 6,
                            std::size_t test_per_class = 2, std::size_t n_points = 24) {
  SynthConfig s;
  s.train_per_class = train_per_class;
  s.test_per_class = test_per_class;
  s.n_points = n_points;
  return generate_synthetic(s, seed);
}

inline TrainConfig tiny_train_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.augmentor = tiny_augmentor_config();
  c.classifier = tiny_classifier_config();
  return c;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pointaugment_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
