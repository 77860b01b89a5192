#include "pointaugment/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "pointaugment/errors.hpp"

namespace pointaugment {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::SgdMomentum;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

OptimizerState OptimizerState::create(OptimizerKind kind, std::size_t n) {
  OptimizerState s;
  s.kind = kind;
  s.first.assign(n, 0.0);
  if (kind == OptimizerKind::Adam) s.second.assign(n, 0.0);
  return s;
}

void optimizer_step(OptimizerState& s, ParameterSet& params, std::span<const double> grad,
                    double lr) {
  const std::size_t n = params.size();
  if (grad.size() != n || s.first.size() != n) throw InvalidInput("optimizer: size mismatch");
  ++s.steps;
  double* p = params.values.data();
  double* m = s.first.data();
  if (s.kind == OptimizerKind::SgdMomentum) {
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = kSgdMomentum * m[i] + grad[i];
      if (lr != 0.0) p[i] -= lr * m[i];
    }
    return;
  }
  double* v = s.second.data();
  const double t = static_cast<double>(s.steps);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    if (lr != 0.0) p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
  }
}

double step_decay_lr(double base, std::size_t epoch, double rate, std::size_t every) {
  if (every == 0) return base;
  return base * std::pow(rate, static_cast<double>(epoch / every));
}

double cosine_lr(double base, std::size_t epoch, std::size_t total) {
  if (total == 0) return base;
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                      static_cast<double>(total)));
}

}  // namespace pointaugment
