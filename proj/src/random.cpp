#include "pointaugment/random.hpp"

#include <sstream>

#include "pointaugment/errors.hpp"

namespace pointaugment {

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

void Rng::fill_normal(std::span<double> out, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : out) v = dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw InvalidInput("Rng::index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng.engine_;
  if (is.fail()) throw LoadError("corrupt random engine state");
  return rng;
}

}  // namespace pointaugment
