#include "pointaugment/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "pointaugment/errors.hpp"

namespace pointaugment {

namespace {

struct PointNetTrace final : ClassifierTrace {
  MlpTrace points;
  ShapeFeature pooled;
  MlpTrace head;
};

MlpSpec point_spec(const PointNetConfig& c) {
  MlpSpec s{{3}, true, c.feature_norm};
  s.widths.insert(s.widths.end(), c.point_hidden.begin(), c.point_hidden.end());
  s.widths.push_back(c.global_dim);
  return s;
}

MlpSpec head_spec(const PointNetConfig& c) {
  MlpSpec s{{c.global_dim}, false};
  s.widths.insert(s.widths.end(), c.head_hidden.begin(), c.head_hidden.end());
  s.widths.push_back(c.num_classes);
  return s;
}

}  // namespace

PointNetClassifier::PointNetClassifier(PointNetConfig config) : config_(std::move(config)) {
  if (config_.num_classes < 1) throw ConfigError("classifier needs at least one class");
  point_mlp_ = Mlp(point_spec(config_), 0);
  head_ = Mlp(head_spec(config_), point_mlp_.end_offset());
}

ParameterSet PointNetClassifier::initialize(Rng& rng) const {
  ParameterSet p{std::vector<double>(parameter_count())};
  point_mlp_.initialize(p.values, rng);
  head_.initialize(p.values, rng);
  return p;
}

ClassifierOutput PointNetClassifier::forward(const ParameterSet& params,
                                             const PointCloud& cloud) const {
  const Matrix features = point_mlp_.forward(params.values, cloud.points());
  ShapeFeature pooled = max_pool_points(features);
  ClassifierOutput out;
  out.logits = fc_head_forward(head_, params.values, pooled.values);
  out.global_feature = std::move(pooled.values);
  return out;
}

std::unique_ptr<ClassifierTrace> PointNetClassifier::forward_traced(
    const ParameterSet& params, const PointCloud& cloud) const {
  auto t = std::make_unique<PointNetTrace>();
  const Matrix features = point_mlp_.forward(params.values, cloud.points(), &t->points);
  t->pooled = max_pool_points(features);
  Matrix g(1, t->pooled.values.size(), t->pooled.values);
  Matrix logits = head_.forward(params.values, g, &t->head);
  t->output.logits.assign(logits.values().begin(), logits.values().end());
  t->output.global_feature = t->pooled.values;
  return t;
}

void PointNetClassifier::backward(const ParameterSet& params, const ClassifierTrace& trace,
                                  std::span<const double> d_logits,
                                  std::span<const double> d_feature, std::span<double> grad,
                                  Matrix* d_input) const {
  const auto& t = dynamic_cast<const PointNetTrace&>(trace);
  if (d_logits.size() != num_classes()) throw ConfigError("d_logits has the wrong length");
  Matrix dl(1, d_logits.size(), std::vector<double>(d_logits.begin(), d_logits.end()));
  Matrix dg;
  head_.backward(params.values, t.head, std::move(dl), grad, &dg);
  if (!d_feature.empty()) {
    if (d_feature.size() != feature_dim()) throw ConfigError("d_feature has the wrong length");
    for (std::size_t c = 0; c < d_feature.size(); ++c) dg(0, c) += d_feature[c];
  }
  Matrix d_points(t.points.activations.front().rows(), feature_dim());
  max_pool_backward(t.pooled, dg.row(0), d_points);
  point_mlp_.backward(params.values, t.points, std::move(d_points), grad, d_input);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict(const Classifier& classifier, const ParameterSet& params,
                    const PointCloud& cloud) {
  return argmax(classifier.forward(params, cloud).logits);
}

}  // namespace pointaugment
