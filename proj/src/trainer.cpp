#include "pointaugment/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pointaugment/errors.hpp"
#include "pointaugment/evaluator.hpp"

namespace pointaugment {

namespace {

PointNetConfig with_classes(PointNetConfig c, std::size_t k) {
  c.num_classes = k;
  return c;
}

void add_scaled(LossReport& acc, const LossReport& r, double w) {
  acc.loss_original += w * r.loss_original;
  acc.loss_augmented += w * r.loss_augmented;
  acc.rho += w * r.rho;
  acc.xi += w * r.xi;
  acc.xi_upper += w * r.xi_upper;
  acc.augmentor_loss += w * r.augmentor_loss;
  acc.classifier_loss += w * r.classifier_loss;
  acc.feature_gap += w * r.feature_gap;
}

LossReport zero_report() {
  LossReport r;
  r.rho = 0.0;
  return r;
}

void check_finite(const BatchGradient& g, const char* what) {
  const bool grad_ok =
      std::all_of(g.grad.begin(), g.grad.end(), [](double v) { return std::isfinite(v); });
  if (g.report.all_finite() && grad_ok) return;
  std::ostringstream os;
  os << what << ": non-finite value (L(P)=" << g.report.loss_original
     << " L(P')=" << g.report.loss_augmented << " rho=" << g.report.rho
     << " L_A=" << g.report.augmentor_loss << " L_C=" << g.report.classifier_loss
     << " gap=" << g.report.feature_gap << " gradient_finite=" << (grad_ok ? "yes" : "no") << ")";
  throw TrainingAborted(os.str());
}

void put_double(std::ostream& os, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, p - buf);
}

}  // namespace

const PointCloud* ReplayPool::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

void ReplayPool::put(const std::string& id, PointCloud cloud) {
  auto it = entries_.find(id);
  if (it != entries_.end()) {
    it->second = std::move(cloud);
    return;
  }
  if (entries_.size() >= capacity_) throw ConfigError("replay pool is full");
  entries_.emplace(id, std::move(cloud));
}

std::string metrics_tsv_header() {
  return "epoch\ttrain_accuracy\ttest_accuracy\taugmentor_loss\tclassifier_loss\trho\txi\t"
         "feature_gap";
}

void write_metrics_tsv(std::ostream& os, std::span<const EpochMetrics> rows) {
  os << metrics_tsv_header() << '\n';
  for (const auto& m : rows) {
    os << m.epoch;
    for (double v : {m.train_accuracy, m.test_accuracy, m.augmentor_loss, m.classifier_loss,
                     m.rho, m.xi, m.feature_gap}) {
      os << '\t';
      put_double(os, v);
    }
    os << '\n';
  }
}

std::vector<MixedEntry> build_mixed_batch(const ReplayPool& pool, std::span<const Sample> train,
                                          std::span<const std::size_t> batch, Rng& rng) {
  const std::size_t b = batch.size();
  if (b % 2 != 0) throw ConfigError("mixed batches need an even batch size");
  std::vector<std::size_t> slots(b);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t i = 0; i < b / 2; ++i) std::swap(slots[i], slots[i + rng.index(b - i)]);
  std::vector<bool> replay(b, false);
  for (std::size_t i = 0; i < b / 2; ++i) replay[slots[i]] = true;

  std::vector<MixedEntry> out(b);
  for (std::size_t k = 0; k < b; ++k) {
    const Sample& s = train[batch[k]];
    out[k] = {batch[k], &s.cloud, false};
    if (replay[k]) {
      if (const PointCloud* prev = pool.find(s.id)) out[k] = {batch[k], prev, true};
    }
  }
  return out;
}

Trainer::Trainer(const Dataset& dataset, TrainConfig config)
    : augmentor_(config.augmentor),
      classifier_(with_classes(config.classifier, dataset.num_classes())) {
  config.validate();
  init_views(dataset);
  state_.config = std::move(config);
  state_.num_classes = dataset.num_classes();
  state_.rng = Rng(state_.config.seed);
  state_.augmentor = augmentor_.initialize(state_.rng);
  state_.classifier = classifier_.initialize(state_.rng);
  state_.augmentor_optimizer = OptimizerState::create(OptimizerKind::Adam, state_.augmentor.size());
  state_.classifier_optimizer =
      OptimizerState::create(state_.config.classifier_optimizer, state_.classifier.size());
  state_.pool = ReplayPool(train_.size());
}

Trainer::Trainer(const Dataset& dataset, TrainingState state)
    : augmentor_(state.config.augmentor),
      classifier_(with_classes(state.config.classifier, dataset.num_classes())) {
  state.config.validate();
  if (state.num_classes != dataset.num_classes()) {
    throw ConfigError("checkpoint class count does not match the dataset");
  }
  if (state.augmentor.size() != augmentor_.parameter_count() ||
      state.classifier.size() != classifier_.parameter_count()) {
    throw ConfigError("checkpoint parameter sizes do not match the configured networks");
  }
  init_views(dataset);
  state_ = std::move(state);
}

void Trainer::init_views(const Dataset& dataset) {
  dataset.validate();
  train_ = dataset.subset(Split::Train);
  test_ = dataset.subset(Split::Test);
  if (train_.empty()) throw InvalidInput("dataset has no training samples");
}

std::vector<AugmentorDraw> Trainer::draw_batch(std::span<const std::size_t> batch) {
  std::vector<AugmentorDraw> draws;
  draws.reserve(batch.size());
  for (std::size_t idx : batch) {
    draws.push_back(augmentor_.draw(state_.rng, train_[idx].cloud.size(), true));
  }
  return draws;
}

BatchGradient Trainer::augmentor_gradient(std::span<const std::size_t> batch,
                                          std::span<const AugmentorDraw> draws) const {
  if (draws.size() != batch.size()) throw ConfigError("one augmentor draw per sample required");
  const TrainConfig& cfg = state_.config;
  BatchGradient out{std::vector<double>(state_.augmentor.size(), 0.0), zero_report(), 0};
  const double inv = 1.0 / static_cast<double>(batch.size());
  const std::size_t k_classes = classifier_.num_classes();

  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Sample& s = train_[batch[k]];
    const AugmentorDraw& draw = draws[k];
    AugmentorTrace trace;
    const AugmentorOutput aug = augmentor_.augment(state_.augmentor, s.cloud, draw, &trace);

    // Classifier is frozen here, so L(P) and rho are constants.
    const ClassifierOutput orig = classifier_.forward(state_.classifier, s.cloud);
    const double loss_p = cross_entropy_from_logits(orig.logits, s.label);
    const double rho = dynamic_rho(softmax(orig.logits), s.label);

    const bool identity = draw.drop_transform && draw.drop_displacement;
    std::vector<double> d_logits(k_classes, 0.0);
    std::unique_ptr<ClassifierTrace> ct;
    double loss_pp = loss_p;
    if (!identity) {
      ct = classifier_.forward_traced(state_.classifier, aug.augmented);
      loss_pp = cross_entropy_from_logits(ct->output.logits, s.label, d_logits);
    }

    double la = 0.0;
    double dla = 0.0;
    if (cfg.objective == AugmentorObjective::Bounded) {
      la = augmentor_loss(loss_pp, loss_p, rho, cfg.weights);
      dla = augmentor_loss_grad(loss_pp, loss_p, rho, cfg.weights);
    } else {
      la = naive_augmentor_loss(loss_pp, loss_p);
      dla = naive_augmentor_loss_grad(loss_pp, loss_p);
    }

    if (!identity && dla != 0.0) {
      for (double& g : d_logits) g *= dla * inv;
      Matrix d_points;
      classifier_.backward(state_.classifier, *ct, d_logits, {}, {}, &d_points);
      augmentor_.backward(state_.augmentor, s.cloud, draw, trace, d_points, out.grad);
    }

    LossReport r;
    r.loss_original = loss_p;
    r.loss_augmented = loss_pp;
    r.rho = rho;
    r.xi = loss_pp - loss_p;
    r.xi_upper = (rho - 1.0) * loss_p;
    r.augmentor_loss = la;
    add_scaled(out.report, r, inv);
  }
  return out;
}

BatchGradient Trainer::classifier_gradient(std::span<const MixedEntry> entries,
                                           std::span<const AugmentorDraw> draws,
                                           std::vector<PointCloud>* augmented) const {
  if (draws.size() != entries.size()) throw ConfigError("one augmentor draw per sample required");
  const double gamma = state_.config.weights.gamma;
  BatchGradient out{std::vector<double>(state_.classifier.size(), 0.0), zero_report(), 0};
  const double inv = 1.0 / static_cast<double>(entries.size());
  const std::size_t k_classes = classifier_.num_classes();
  if (augmented) augmented->clear();

  for (std::size_t k = 0; k < entries.size(); ++k) {
    const MixedEntry& e = entries[k];
    const Sample& s = train_[e.sample];
    AugmentorOutput aug = augmentor_.augment(state_.augmentor, s.cloud, draws[k]);

    std::vector<double> d_orig(k_classes), d_aug(k_classes);
    const auto tq = classifier_.forward_traced(state_.classifier, *e.input);
    const double loss_p = cross_entropy_from_logits(tq->output.logits, s.label, d_orig);
    if (argmax(tq->output.logits) == s.label) ++out.correct;

    LossReport r;
    r.loss_original = loss_p;
    const bool same_input = !e.replayed && aug.dropped_transform && aug.dropped_displacement;
    if (same_input) {
      // P' = P exactly: both terms share one pass and the feature gap is zero.
      for (double& g : d_orig) g *= 2.0 * inv;
      classifier_.backward(state_.classifier, *tq, d_orig, {}, out.grad, nullptr);
      r.loss_augmented = loss_p;
    } else {
      const auto tp = classifier_.forward_traced(state_.classifier, aug.augmented);
      const double loss_pp = cross_entropy_from_logits(tp->output.logits, s.label, d_aug);
      const auto& fq = tq->output.global_feature;
      const auto& fp = tp->output.global_feature;
      r.loss_augmented = loss_pp;
      r.feature_gap = feature_gap(fq, fp);
      std::vector<double> d_fq = feature_gap_grad(fq, fp);
      std::vector<double> d_fp(d_fq.size());
      for (std::size_t c = 0; c < d_fq.size(); ++c) {
        d_fq[c] *= gamma * inv;
        d_fp[c] = -d_fq[c];
      }
      for (double& g : d_orig) g *= inv;
      for (double& g : d_aug) g *= inv;
      classifier_.backward(state_.classifier, *tq, d_orig, d_fq, out.grad, nullptr);
      classifier_.backward(state_.classifier, *tp, d_aug, d_fp, out.grad, nullptr);
    }
    r.xi = r.loss_augmented - r.loss_original;
    r.rho = 0.0;
    r.classifier_loss =
        classifier_loss(r.loss_augmented, r.loss_original, r.feature_gap, state_.config.weights);
    add_scaled(out.report, r, inv);
    if (augmented) augmented->push_back(std::move(aug.augmented));
  }
  return out;
}

BatchGradient Trainer::baseline_gradient(std::span<const PointCloud> inputs,
                                         std::span<const std::size_t> labels) const {
  BatchGradient out{std::vector<double>(state_.classifier.size(), 0.0), zero_report(), 0};
  const double inv = 1.0 / static_cast<double>(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> d(classifier_.num_classes());
    const auto t = classifier_.forward_traced(state_.classifier, inputs[k]);
    const double loss = cross_entropy_from_logits(t->output.logits, labels[k], d);
    if (argmax(t->output.logits) == labels[k]) ++out.correct;
    for (double& g : d) g *= inv;
    classifier_.backward(state_.classifier, *t, d, {}, out.grad, nullptr);
    LossReport r = zero_report();
    r.loss_original = loss;
    r.classifier_loss = loss;
    add_scaled(out.report, r, inv);
  }
  return out;
}

LossReport Trainer::augmentor_step(std::span<const std::size_t> batch,
                                   std::span<const AugmentorDraw> draws, double lr) {
  BatchGradient g = augmentor_gradient(batch, draws);
  check_finite(g, "augmentor step");
  optimizer_step(state_.augmentor_optimizer, state_.augmentor, g.grad, lr);
  return g.report;
}

LossReport Trainer::classifier_step(std::span<const MixedEntry> entries,
                                    std::span<const AugmentorDraw> draws, double lr,
                                    std::size_t* correct) {
  std::vector<PointCloud> augmented;
  BatchGradient g = classifier_gradient(entries, draws, &augmented);
  check_finite(g, "classifier step");
  optimizer_step(state_.classifier_optimizer, state_.classifier, g.grad, lr);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    state_.pool.put(train_[entries[k].sample].id, std::move(augmented[k]));
  }
  if (correct) *correct = g.correct;
  return g.report;
}

EpochMetrics Trainer::run_epoch() {
  const TrainConfig& cfg = state_.config;
  const std::size_t e = state_.epoch;
  const double lr_c = cfg.classifier_lr_at(e);
  const double lr_a = cfg.augmentor_lr_at(e);

  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[state_.rng.index(i + 1)]);

  LossReport sums = zero_report();
  std::size_t correct = 0;
  const double inv_n = 1.0 / static_cast<double>(order.size());

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    const std::span<const std::size_t> batch(order.data() + start, end - start);
    const double weight = static_cast<double>(batch.size()) * inv_n;

    if (cfg.mode == TrainingMode::PointAugment) {
      const auto draws = draw_batch(batch);
      const LossReport ra = augmentor_step(batch, draws, lr_a);

      std::vector<MixedEntry> entries;
      if (cfg.mixed_sampling) {
        // A trailing odd sample is kept as an original.
        const std::size_t even = batch.size() - batch.size() % 2;
        entries = build_mixed_batch(state_.pool, train_, batch.first(even), state_.rng);
        if (even < batch.size()) entries.push_back({batch.back(), &train_[batch.back()].cloud, false});
      } else {
        for (std::size_t idx : batch) entries.push_back({idx, &train_[idx].cloud, false});
      }
      std::size_t batch_correct = 0;
      const LossReport rc = classifier_step(entries, draws, lr_c, &batch_correct);
      correct += batch_correct;

      LossReport merged = ra;
      merged.classifier_loss = rc.classifier_loss;
      merged.feature_gap = rc.feature_gap;
      add_scaled(sums, merged, weight);
    } else {
      std::vector<PointCloud> inputs;
      std::vector<std::size_t> labels;
      for (std::size_t idx : batch) {
        const Sample& s = train_[idx];
        inputs.push_back(cfg.mode == TrainingMode::Conventional
                             ? conventional_da(s.cloud, state_.rng, cfg.conventional)
                             : s.cloud);
        labels.push_back(s.label);
      }
      BatchGradient g = baseline_gradient(inputs, labels);
      check_finite(g, "classifier step");
      optimizer_step(state_.classifier_optimizer, state_.classifier, g.grad, lr_c);
      correct += g.correct;
      add_scaled(sums, g.report, weight);
    }
  }

  EpochMetrics m;
  m.epoch = e + 1;
  m.train_accuracy = static_cast<double>(correct) * inv_n;
  m.test_accuracy =
      test_.empty() ? 0.0 : classification_accuracy(classifier_, state_.classifier, test_);
  m.augmentor_loss = sums.augmentor_loss;
  m.classifier_loss = sums.classifier_loss;
  m.rho = sums.rho;
  m.xi = sums.xi;
  m.feature_gap = sums.feature_gap;
  state_.history.push_back(m);
  state_.epoch = e + 1;
  return m;
}

void Trainer::run(std::size_t epochs, const std::function<void(const TrainingState&)>& on_epoch) {
  while (state_.epoch < epochs) {
    run_epoch();
    if (on_epoch) on_epoch(state_);
  }
}

TrainingState train(const Dataset& dataset, const TrainConfig& config) {
  Trainer t(dataset, config);
  t.run(config.epochs);
  return std::move(t.state());
}

}  // namespace pointaugment
