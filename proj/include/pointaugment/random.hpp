#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace pointaugment {

/// Seeded random source. Every randomized operation takes one explicitly so
/// results are pure functions of (input, seed). Distributions are created per
/// call, so the engine state alone determines all future draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  void fill_normal(std::span<double> out, double mean, double stddev);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p);
  std::uint64_t next_u64() { return engine_(); }

  /// Engine state as text; restoring it reproduces the draw sequence exactly.
  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pointaugment
