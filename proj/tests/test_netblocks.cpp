#include <doctest.h>

#include "pointaugment/errors.hpp"
#include "pointaugment/netblocks.hpp"
#include "support.hpp"

using namespace pointaugment;
using namespace testing;

TEST_CASE("Mlp layout") {
  const Mlp mlp({{3, 5, 2}, false}, 7);
  CHECK(mlp.in_width() == 3);
  CHECK(mlp.out_width() == 2);
  CHECK(mlp.layer_count() == 2);
  CHECK(mlp.parameter_count() == 3 * 5 + 5 + 5 * 2 + 2);
  CHECK(mlp.end_offset() == 7 + mlp.parameter_count());
  CHECK_THROWS_AS(Mlp({{3}, false}, 0), ConfigError);
  CHECK_THROWS_AS(Mlp({{3, 0, 2}, false}, 0), ConfigError);
}

TEST_CASE("single linear identity layer passes input through") {
  const Mlp mlp({{3, 3}, false}, 0);
  std::vector<double> p(mlp.parameter_count(), 0.0);
  auto w = mlp.weight(std::span<double>(p), 0);
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  Rng rng(1);
  const Matrix x = random_cloud(9, rng).points();
  CHECK(shared_mlp_forward(mlp, p, x) == x);
}

TEST_CASE("zero weights give the bias") {
  const Mlp mlp({{4, 2}, false}, 0);
  std::vector<double> p(mlp.parameter_count(), 0.0);
  auto b = mlp.bias(std::span<double>(p), 0);
  b[0] = 0.5;
  b[1] = -2.0;
  const auto out = fc_head_forward(mlp, p, std::vector<double>{1, 2, 3, 4});
  CHECK(out == std::vector<double>{0.5, -2.0});
}

TEST_CASE("random one-layer net matches a per-row affine oracle") {
  Rng rng(2);
  const Mlp mlp({{3, 4}, true}, 0);
  std::vector<double> p(mlp.parameter_count());
  randomize_all(p, rng, 1.0);
  const Matrix x = random_cloud(6, rng).points();
  const Matrix y = shared_mlp_forward(mlp, p, x);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t j = 0; j < 4; ++j) {
      double s = p[3 * 4 + j];
      for (std::size_t i = 0; i < 3; ++i) s += x(r, i) * p[i * 4 + j];
      CHECK(y(r, j) == doctest::Approx(std::max(0.0, s)).epsilon(1e-14));
    }
  }
}

TEST_CASE("width mismatch throws") {
  const Mlp mlp({{3, 4}, false}, 0);
  std::vector<double> p(mlp.parameter_count(), 0.1);
  CHECK_THROWS_AS(shared_mlp_forward(mlp, p, Matrix(5, 4)), ConfigError);
}

TEST_CASE("shared MLP commutes with row permutation; max pool is invariant") {
  Rng rng(3);
  const Mlp mlp({{3, 8, 6}, true}, 0);
  std::vector<double> p(mlp.parameter_count());
  mlp.initialize(p, rng);
  const PointCloud c = random_cloud(30, rng);
  const Matrix f = shared_mlp_forward(mlp, p, c.points());
  const auto g = max_pool_points(f);
  for (int t = 0; t < 10; ++t) {
    const auto perm = random_permutation(30, rng);
    const Matrix fp = shared_mlp_forward(mlp, p, permute_rows(c, perm).points());
    for (std::size_t i = 0; i < 30; ++i) {
      for (std::size_t j = 0; j < 6; ++j) CHECK(fp(i, j) == f(perm[i], j));
    }
    CHECK(max_pool_points(fp).values == g.values);
  }
}

TEST_CASE("max pool") {
  const Matrix one(1, 3, 0.0);
  Matrix row(1, 3);
  row(0, 0) = 1;
  row(0, 1) = -2;
  row(0, 2) = 3;
  CHECK(max_pool_points(row).values == std::vector<double>{1, -2, 3});
  CHECK_THROWS_AS(max_pool_points(Matrix(0, 3)), InvalidInput);

  Matrix x(3, 2);
  x(0, 0) = 1;
  x(1, 0) = 4;
  x(2, 0) = 2;
  x(0, 1) = -1;
  x(1, 1) = -3;
  x(2, 1) = -0.5;
  const auto g = max_pool_points(x);
  CHECK(g.values == std::vector<double>{4, -0.5});
  CHECK(g.argmax == std::vector<std::size_t>{1, 2});
  Matrix dx(3, 2);
  max_pool_backward(g, std::vector<double>{10, 20}, dx);
  CHECK(dx(1, 0) == 10);
  CHECK(dx(2, 1) == 20);
  CHECK(dx(0, 0) == 0);
}

TEST_CASE("initialization uses fan-in bounds and zero biases") {
  Rng rng(4);
  const Mlp mlp({{3, 50, 20}, false}, 0);
  std::vector<double> p(mlp.parameter_count());
  mlp.initialize(p, rng);
  const double bound0 = std::sqrt(6.0 / 3.0), bound1 = std::sqrt(6.0 / 50.0);
  for (double w : mlp.weight(std::span<const double>(p), 0)) CHECK(std::abs(w) <= bound0);
  for (double w : mlp.weight(std::span<const double>(p), 1)) CHECK(std::abs(w) <= bound1);
  for (double b : mlp.bias(std::span<const double>(p), 0)) CHECK(b == 0.0);
  for (double b : mlp.bias(std::span<const double>(p), 1)) CHECK(b == 0.0);
}

TEST_CASE("shared MLP + max pool gradients match finite differences") {
  Rng rng(5);
  const Mlp mlp({{3, 7, 5}, true}, 0);
  std::vector<double> p(mlp.parameter_count());
  mlp.initialize(p, rng);
  for (double& b : p) b += rng.uniform(-0.1, 0.1);  // biases nonzero too
  Matrix x = random_cloud(10, rng).points();
  std::vector<double> coef(5);
  for (double& c : coef) c = rng.uniform(-1, 1);

  auto objective = [&]() {
    const auto g = max_pool_points(shared_mlp_forward(mlp, p, x));
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += coef[j] * g.values[j];
    return s;
  };

  MlpTrace trace;
  const Matrix f = mlp.forward(p, x, &trace);
  const auto g = max_pool_points(f);
  Matrix df(f.rows(), f.cols());
  max_pool_backward(g, coef, df);
  std::vector<double> grad(p.size(), 0.0);
  Matrix dx;
  mlp.backward(p, trace, df, grad, &dx);

  std::size_t good = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    good += relative_error(grad[i], central_difference(p, i, objective)) < 1e-4;
  }
  CHECK(good == p.size());

  std::vector<double> xs(x.values().begin(), x.values().end());
  auto objective_x = [&]() {
    Matrix xm(10, 3, xs);
    const auto gg = max_pool_points(shared_mlp_forward(mlp, p, xm));
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += coef[j] * gg.values[j];
    return s;
  };
  good = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    good += relative_error(dx.values()[i], central_difference(xs, i, objective_x)) < 1e-4;
  }
  CHECK(good == xs.size());
}

TEST_CASE("ParameterSet hash tracks bit changes") {
  ParameterSet a{{1.0, 2.0, 3.0}};
  ParameterSet b = a;
  CHECK(a.hash() == b.hash());
  b.values[1] = std::nextafter(2.0, 3.0);
  CHECK(a.hash() != b.hash());
}

TEST_CASE("normalized layers: invariance to input scale and finite-difference gradients") {
  Rng rng(6);
  const Mlp mlp({{3, 6, 5}, true, true}, 0);
  CHECK(mlp.parameter_count() == 3 * 6 + 6 + 2 * 6 + 6 * 5 + 5 + 2 * 5);
  std::vector<double> p(mlp.parameter_count());
  mlp.initialize(p, rng);
  for (double g : mlp.gain(std::span<const double>(p), 0)) CHECK(g == 1.0);
  for (double& v : p) v += rng.uniform(-0.2, 0.2);
  Matrix x = random_cloud(12, rng).points();

  Matrix scaled = x;
  for (double& v : scaled.values()) v *= 7.0;
  const Matrix y = mlp.forward(p, x);
  const Matrix ys = mlp.forward(p, scaled);
  // Only the epsilon inside the square root breaks exact invariance.
  CHECK(max_abs_diff(y, ys) < 1e-3);

  std::vector<double> coef(5);
  for (double& c : coef) c = rng.uniform(-1, 1);
  auto objective = [&]() {
    const auto g = max_pool_points(mlp.forward(p, x));
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += coef[j] * g.values[j];
    return s;
  };
  MlpTrace trace;
  const Matrix f = mlp.forward(p, x, &trace);
  const auto g = max_pool_points(f);
  Matrix df(f.rows(), f.cols());
  max_pool_backward(g, coef, df);
  std::vector<double> grad(p.size(), 0.0);
  Matrix dx;
  mlp.backward(p, trace, df, grad, &dx);
  std::size_t good = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    good += relative_error(grad[i], central_difference(p, i, objective)) < 1e-4;
  }
  CHECK(good == p.size());

  std::vector<double> xs(x.values().begin(), x.values().end());
  auto objective_x = [&]() {
    const auto gg = max_pool_points(mlp.forward(p, Matrix(12, 3, xs)));
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) s += coef[j] * gg.values[j];
    return s;
  };
  good = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    good += relative_error(dx.values()[i], central_difference(xs, i, objective_x)) < 1e-4;
  }
  CHECK(good == xs.size());
}
