#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pointaugment {

/// Probabilities below this are clamped before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

struct LossWeights {
  double lambda = 1.0;  // weight of the bounded penalty in the augmentor loss
  double gamma = 10.0;  // weight of the feature-consistency term in the classifier loss

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Per-sample (or batch-mean) loss terms.
struct LossReport {
  double loss_original = 0.0;   // L(P)
  double loss_augmented = 0.0;  // L(P')
  double rho = 1.0;
  double xi = 0.0;        // L(P') - L(P)
  double xi_upper = 0.0;  // (rho - 1) * L(P)
  double augmentor_loss = 0.0;
  double classifier_loss = 0.0;
  double feature_gap = 0.0;  // ||F_g - F_g'||_2

  bool all_finite() const;
};

/// -log(max(p_label, floor)).
double cross_entropy(std::span<const double> probs, std::size_t label);

/// Same quantity computed from logits via log-sum-exp. Writes the gradient
/// w.r.t. the logits (softmax - onehot, or zero when the floor is active)
/// into grad if it is non-empty.
double cross_entropy_from_logits(std::span<const double> logits, std::size_t label,
                                 std::span<double> grad = {});

/// exp(-(L(P') - L(P))).
double naive_augmentor_loss(double loss_augmented, double loss_original);
double naive_augmentor_loss_grad(double loss_augmented, double loss_original);

/// max(1, exp(p_label)).
double dynamic_rho(std::span<const double> probs, std::size_t label);

/// L(P') + lambda * |1 - exp(L(P') - rho * L(P))|.
double augmentor_loss(double loss_augmented, double loss_original, double rho,
                      const LossWeights& weights);

/// Derivative of augmentor_loss w.r.t. L(P'), with rho and L(P) held fixed.
/// At L(P') = rho * L(P) the absolute value contributes a zero subgradient.
double augmentor_loss_grad(double loss_augmented, double loss_original, double rho,
                           const LossWeights& weights);

/// L(P') + L(P) + gamma * feature_gap.
double classifier_loss(double loss_augmented, double loss_original, double feature_gap,
                       const LossWeights& weights);

/// Euclidean distance between two feature vectors.
double feature_gap(std::span<const double> a, std::span<const double> b);

/// Gradient of ||a - b|| w.r.t. a; zero when a == b.
std::vector<double> feature_gap_grad(std::span<const double> a, std::span<const double> b);

}  // namespace pointaugment
