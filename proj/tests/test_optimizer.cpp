#include <doctest.h>

#include "pointaugment/errors.hpp"
#include "pointaugment/optimizer.hpp"

using namespace pointaugment;

TEST_CASE("Adam first step moves each parameter by about the learning rate") {
  ParameterSet p{{1.0, -2.0, 0.5}};
  auto s = OptimizerState::create(OptimizerKind::Adam, 3);
  optimizer_step(s, p, std::vector<double>{0.3, -4.0, 0.0}, 0.01);
  CHECK(p.values[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(p.values[1] == doctest::Approx(-1.99).epsilon(1e-6));
  CHECK(p.values[2] == 0.5);
  CHECK(s.steps == 1);
}

TEST_CASE("Adam matches a hand-rolled recurrence") {
  ParameterSet p{{0.2}};
  auto s = OptimizerState::create(OptimizerKind::Adam, 1);
  double x = 0.2, m = 0, v = 0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2 * x - 1;
    optimizer_step(s, p, std::vector<double>{2 * p.values[0] - 1}, 0.05);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.values[0] == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("SGD momentum") {
  ParameterSet p{{1.0}};
  auto s = OptimizerState::create(OptimizerKind::SgdMomentum, 1);
  optimizer_step(s, p, std::vector<double>{1.0}, 0.1);
  CHECK(p.values[0] == doctest::Approx(0.9));
  optimizer_step(s, p, std::vector<double>{1.0}, 0.1);
  CHECK(p.values[0] == doctest::Approx(0.9 - 0.1 * 1.9));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::SgdMomentum}) {
    ParameterSet p{{0.123, -4.5}};
    const ParameterSet before = p;
    auto s = OptimizerState::create(kind, 2);
    optimizer_step(s, p, std::vector<double>{3.0, -1.0}, 0.0);
    CHECK(p == before);
  }
}

TEST_CASE("size mismatch throws") {
  ParameterSet p{{1.0, 2.0}};
  auto s = OptimizerState::create(OptimizerKind::Adam, 2);
  CHECK_THROWS_AS(optimizer_step(s, p, std::vector<double>{1.0}, 0.1), InvalidInput);
}

TEST_CASE("schedules") {
  CHECK(step_decay_lr(0.001, 0, 0.5, 20) == 0.001);
  CHECK(step_decay_lr(0.001, 19, 0.5, 20) == 0.001);
  CHECK(step_decay_lr(0.001, 20, 0.5, 20) == 0.0005);
  CHECK(step_decay_lr(0.001, 45, 0.5, 20) == 0.00025);
  CHECK(cosine_lr(0.1, 0, 10) == doctest::Approx(0.1));
  CHECK(cosine_lr(0.1, 5, 10) == doctest::Approx(0.05));
  CHECK(parse_optimizer_kind("sgd") == OptimizerKind::SgdMomentum);
  CHECK(to_string(OptimizerKind::Adam) == "adam");
  CHECK_THROWS_AS(parse_optimizer_kind("rmsprop"), ConfigError);
}
