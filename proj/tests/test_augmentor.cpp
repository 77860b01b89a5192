#include <doctest.h>

#include "pointaugment/augmentor.hpp"
#include "pointaugment/errors.hpp"
#include "support.hpp"

using namespace pointaugment;
using namespace testing;

namespace {

AugmentorConfig no_dropout() {
  AugmentorConfig c = tiny_augmentor_config();
  c.dropout_prob = 0.0;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  AugmentorConfig c = tiny_augmentor_config();
  CHECK_NOTHROW(c.validate());
  c.dropout_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_augmentor_config();
  c.feature_channels = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_augmentor_config();
  c.noise_std = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("fresh parameters regress the identity transform and zero displacement") {
  Rng rng(1);
  const Augmentor aug(tiny_augmentor_config());
  const ParameterSet p = aug.initialize(rng);
  for (int t = 0; t < 20; ++t) {
    const PointCloud c = random_cloud(12, rng);
    const auto [f, g] = aug.extract_features(p, c);
    std::vector<double> z(8);
    rng.fill_normal(z, 0, 5);
    CHECK(aug.regress_shape_transform(p, g, z) == Matrix::identity(3));
    Matrix zn(12, 8);
    rng.fill_normal(zn.values(), 0, 5);
    const Matrix d = aug.regress_displacement(p, f, g, zn);
    CHECK(d == Matrix(12, 3));
  }
}

TEST_CASE("feature extraction symmetry") {
  Rng rng(2);
  const Augmentor aug(tiny_augmentor_config());
  const ParameterSet p = aug.initialize(rng);
  const PointCloud c = random_cloud(15, rng);
  const auto [f, g] = aug.extract_features(p, c);
  CHECK(f.rows() == 15);
  CHECK(f.cols() == 8);
  const auto pooled = max_pool_points(f);
  CHECK(pooled.values == g.values);
  const auto perm = random_permutation(15, rng);
  const auto [fp, gp] = aug.extract_features(p, permute_rows(c, perm));
  CHECK(gp.values == g.values);
  for (std::size_t i = 0; i < 15; ++i) {
    for (std::size_t j = 0; j < 8; ++j) CHECK(fp(i, j) == f(perm[i], j));
  }
  const auto [f1, g1] = aug.extract_features(p, PointCloud{{0.1, 0.2, 0.3}});
  CHECK(g1.values == std::vector<double>(f1.row(0).begin(), f1.row(0).end()));
}

TEST_CASE("trained regressors react to noise") {
  Rng rng(3);
  const Augmentor aug(tiny_augmentor_config());
  ParameterSet p = aug.initialize(rng);
  randomize_all(p.values, rng, 0.5);
  const PointCloud c = random_cloud(10, rng);
  const auto [f, g] = aug.extract_features(p, c);
  std::size_t distinct = 0;
  Matrix prev;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> z(8);
    rng.fill_normal(z, 0, 1);
    const Matrix m = aug.regress_shape_transform(p, g, z);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 3);
    CHECK(m.all_finite());
    if (t > 0 && !(m == prev)) ++distinct;
    prev = m;
  }
  CHECK(distinct >= 95);
}

TEST_CASE("displacement permutes with its inputs") {
  Rng rng(4);
  const Augmentor aug(tiny_augmentor_config());
  ParameterSet p = aug.initialize(rng);
  randomize_all(p.values, rng, 0.5);
  const PointCloud c = random_cloud(9, rng);
  const auto [f, g] = aug.extract_features(p, c);
  Matrix z(9, 8);
  rng.fill_normal(z.values(), 0, 1);
  const Matrix d = aug.regress_displacement(p, f, g, z);
  CHECK(d.rows() == 9);
  CHECK(d.cols() == 3);
  const auto perm = random_permutation(9, rng);
  Matrix fp(9, 8), zp(9, 8);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      fp(i, j) = f(perm[i], j);
      zp(i, j) = z(perm[i], j);
    }
  }
  const Matrix dp = aug.regress_displacement(p, fp, g, zp);
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(dp(i, j) == d(perm[i], j));
  }
  CHECK_THROWS_AS(aug.regress_displacement(p, f, g, Matrix(8, 8)), ConfigError);
}

TEST_CASE("augment contracts") {
  Rng rng(5);
  SUBCASE("fresh parameters without dropout leave the cloud untouched") {
    const Augmentor aug(no_dropout());
    const ParameterSet p = aug.initialize(rng);
    for (int t = 0; t < 20; ++t) {
      const PointCloud c = random_cloud(16, rng);
      const auto out = aug.augment(p, c, rng, true);
      CHECK(out.augmented == c);
      CHECK_FALSE(out.dropped_transform);
      CHECK_FALSE(out.dropped_displacement);
    }
  }
  SUBCASE("dropout probability one always returns the input") {
    AugmentorConfig cfg = tiny_augmentor_config();
    cfg.dropout_prob = 1.0;
    const Augmentor aug(cfg);
    ParameterSet p = aug.initialize(rng);
    randomize_all(p.values, rng, 1.0);
    const PointCloud c = random_cloud(16, rng);
    const auto out = aug.augment(p, c, rng, true);
    CHECK(out.augmented == c);
    CHECK(out.dropped_transform);
    CHECK(out.dropped_displacement);
  }
  SUBCASE("evaluation mode never drops") {
    AugmentorConfig cfg = tiny_augmentor_config();
    cfg.dropout_prob = 1.0;
    const Augmentor aug(cfg);
    const ParameterSet p = aug.initialize(rng);
    const auto out = aug.augment(p, random_cloud(8, rng), rng, false);
    CHECK_FALSE(out.dropped_transform);
    CHECK_FALSE(out.dropped_displacement);
  }
  SUBCASE("seeded") {
    const Augmentor aug(tiny_augmentor_config());
    ParameterSet p = aug.initialize(rng);
    randomize_all(p.values, rng, 0.5);
    const PointCloud c = random_cloud(16, rng);
    Rng a(42), b(42);
    const auto o1 = aug.augment(p, c, a, true);
    const auto o2 = aug.augment(p, c, b, true);
    CHECK(o1.augmented == o2.augmented);
    CHECK(o1.augmentation.shape_transform == o2.augmentation.shape_transform);
    CHECK(o1.dropped_transform == o2.dropped_transform);
  }
  SUBCASE("output is P*M + D for the effective augmentation") {
    const Augmentor aug(tiny_augmentor_config());
    ParameterSet p = aug.initialize(rng);
    randomize_all(p.values, rng, 0.5);
    for (int t = 0; t < 20; ++t) {
      const PointCloud c = random_cloud(16, rng);
      const auto out = aug.augment(p, c, rng, true);
      CHECK(out.augmented == apply_affine(c, out.augmentation));
      if (out.dropped_transform) CHECK(out.augmentation.shape_transform == Matrix::identity(3));
      if (out.dropped_displacement) CHECK(out.augmentation.displacement == Matrix(16, 3));
    }
  }
  SUBCASE("disabled components are pinned") {
    AugmentorConfig cfg = no_dropout();
    cfg.use_transform = false;
    const Augmentor aug(cfg);
    ParameterSet p = aug.initialize(rng);
    randomize_all(p.values, rng, 0.5);
    for (int t = 0; t < 10; ++t) {
      const auto out = aug.augment(p, random_cloud(8, rng), rng, true);
      CHECK(out.dropped_transform);
      CHECK_FALSE(out.dropped_displacement);
      CHECK(out.augmentation.shape_transform == Matrix::identity(3));
    }
  }
}

TEST_CASE("dropout is drawn per component") {
  Rng rng(6);
  const Augmentor aug(tiny_augmentor_config());
  int m_only = 0, d_only = 0, both = 0, none = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto d = aug.draw(rng, 4, true);
    if (d.drop_transform && d.drop_displacement) ++both;
    else if (d.drop_transform) ++m_only;
    else if (d.drop_displacement) ++d_only;
    else ++none;
    CHECK(d.shape_noise.size() == (d.drop_transform ? 0u : 8u));
    CHECK(d.point_noise.rows() == (d.drop_displacement ? 0u : 4u));
  }
  for (int count : {m_only, d_only, both, none}) CHECK(std::abs(count - 500) < 90);
}

TEST_CASE("augmentor gradients match finite differences") {
  Rng rng(7);
  const Augmentor aug(no_dropout());
  ParameterSet p = aug.initialize(rng);
  randomize_all(p.values, rng, 0.4);
  const PointCloud c = random_cloud(16, rng);
  const AugmentorDraw draw = aug.draw(rng, 16, true);
  Matrix coef(16, 3);
  for (double& v : coef.values()) v = rng.uniform(-1, 1);
  auto f = [&]() {
    const auto out = aug.augment(p, c, draw);
    double s = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef.values()[i] * out.augmented.points().values()[i];
    return s;
  };
  AugmentorTrace trace;
  aug.augment(p, c, draw, &trace);
  std::vector<double> grad(p.size(), 0.0);
  aug.backward(p, c, draw, trace, coef, grad);
  std::size_t good = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    good += relative_error(grad[i], central_difference(p.values, i, f)) < 1e-4;
  }
  CHECK(static_cast<double>(good) >= 0.99 * static_cast<double>(p.size()));
}
