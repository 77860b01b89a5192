#include "pointaugment/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pointaugment/errors.hpp"

namespace pointaugment {

bool LossReport::all_finite() const {
  for (double v : {loss_original, loss_augmented, rho, xi, xi_upper, augmentor_loss,
                   classifier_loss, feature_gap}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw InvalidInput("cross_entropy: label out of range");
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

double cross_entropy_from_logits(std::span<const double> logits, std::size_t label,
                                 std::span<double> grad) {
  if (label >= logits.size()) throw InvalidInput("cross_entropy: label out of range");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_z = m + std::log(sum);
  const double ceiling = -std::log(kProbabilityFloor);
  const double loss = log_z - logits[label];
  const bool clamped = loss > ceiling;
  if (!grad.empty()) {
    if (grad.size() != logits.size()) throw InvalidInput("cross_entropy: gradient length");
    for (std::size_t k = 0; k < logits.size(); ++k) {
      grad[k] = clamped ? 0.0 : std::exp(logits[k] - log_z) - (k == label ? 1.0 : 0.0);
    }
  }
  return clamped ? ceiling : loss;
}

double naive_augmentor_loss(double loss_augmented, double loss_original) {
  return std::exp(-(loss_augmented - loss_original));
}

double naive_augmentor_loss_grad(double loss_augmented, double loss_original) {
  return -std::exp(-(loss_augmented - loss_original));
}

double dynamic_rho(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw InvalidInput("dynamic_rho: label out of range");
  return std::max(1.0, std::exp(probs[label]));
}

double augmentor_loss(double loss_augmented, double loss_original, double rho,
                      const LossWeights& w) {
  return loss_augmented +
         w.lambda * std::abs(1.0 - std::exp(loss_augmented - rho * loss_original));
}

double augmentor_loss_grad(double loss_augmented, double loss_original, double rho,
                           const LossWeights& w) {
  const double e = std::exp(loss_augmented - rho * loss_original);
  // d/dx |1 - e^x| = sign(e^x - 1) * e^x
  const double sign = e > 1.0 ? 1.0 : (e < 1.0 ? -1.0 : 0.0);
  return 1.0 + w.lambda * sign * e;
}

double classifier_loss(double loss_augmented, double loss_original, double gap,
                       const LossWeights& w) {
  return loss_augmented + loss_original + w.gamma * gap;
}

double feature_gap(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("feature_gap: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> feature_gap_grad(std::span<const double> a, std::span<const double> b) {
  const double gap = feature_gap(a, b);
  std::vector<double> g(a.size(), 0.0);
  if (gap == 0.0) return g;
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = (a[i] - b[i]) / gap;
  return g;
}

}  // namespace pointaugment
