#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pointaugment/netblocks.hpp"

namespace pointaugment {

enum class OptimizerKind { Adam, SgdMomentum };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

/// Moment buffers for Adam (first and second moments) or SGD (velocity in
/// `first`, `second` unused).
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::vector<double> first;
  std::vector<double> second;
  std::uint64_t steps = 0;

  static OptimizerState create(OptimizerKind kind, std::size_t parameter_count);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kSgdMomentum = 0.9;

/// One update of params along -grad. A zero learning rate leaves params
/// bit-identical (moment buffers still advance).
void optimizer_step(OptimizerState& state, ParameterSet& params, std::span<const double> grad,
                    double learning_rate);

/// base * rate^floor(epoch / every).
double step_decay_lr(double base, std::size_t epoch, double rate, std::size_t every);

/// base * (1 + cos(pi * epoch / total)) / 2.
double cosine_lr(double base, std::size_t epoch, std::size_t total);

}  // namespace pointaugment
