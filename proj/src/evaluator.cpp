#include "pointaugment/evaluator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include "pointaugment/errors.hpp"
#include "pointaugment/trainer.hpp"

namespace pointaugment {

namespace {

void put_double(std::ostream& os, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, p - buf);
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

double classification_accuracy(const Classifier& classifier, const ParameterSet& params,
                               std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidInput("accuracy of an empty sample set");
  const long n = static_cast<long>(samples.size());
  long correct = 0;
#pragma omp parallel for reduction(+ : correct) schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    if (predict(classifier, params, samples[i].cloud) == samples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::vector<std::vector<double>> global_features(const Classifier& classifier,
                                                 const ParameterSet& params,
                                                 std::span<const Sample> samples) {
  std::vector<std::vector<double>> out(samples.size());
  const long n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    out[i] = classifier.forward(params, samples[i].cloud).global_feature;
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine similarity of vectors of different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double average_precision(std::span<const bool> relevant) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (!relevant[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

RetrievalResult retrieval_map(std::span<const std::vector<double>> features,
                              std::span<const std::size_t> labels) {
  const std::size_t n = features.size();
  if (labels.size() != n) throw InvalidInput("retrieval: one label per feature required");
  if (n < 2) throw InvalidInput("retrieval needs at least two samples");

  RetrievalResult res;
  for (const auto& f : features) {
    if (std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; })) {
      ++res.degenerate_features;
    }
  }

  std::vector<double> ap(n, 0.0);
  std::vector<char> evaluated(n, 0);
  const long ln = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long q = 0; q < ln; ++q) {
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(q)) continue;
      ranked.emplace_back(-cosine_similarity(features[q], features[j]), j);
    }
    std::sort(ranked.begin(), ranked.end());
    const auto rel = std::make_unique<bool[]>(ranked.size());
    bool any = false;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      rel[k] = labels[ranked[k].second] == labels[q];
      any = any || rel[k];
    }
    if (!any) continue;
    ap[q] = average_precision(std::span<const bool>(rel.get(), ranked.size()));
    evaluated[q] = 1;
  }

  double total = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    if (!evaluated[q]) {
      ++res.skipped_queries;
      continue;
    }
    res.query.push_back(q);
    res.average_precision.push_back(ap[q]);
    total += ap[q];
  }
  if (res.query.empty()) throw InvalidInput("retrieval: no query has a same-class candidate");
  res.mean_ap = total / static_cast<double>(res.query.size());
  return res;
}

RetrievalResult retrieval_map(const Classifier& classifier, const ParameterSet& params,
                              std::span<const Sample> samples) {
  const auto feats = global_features(classifier, params, samples);
  std::vector<std::size_t> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return retrieval_map(feats, labels);
}

std::string CorruptionSetting::label() const {
  switch (kind) {
    case CorruptionKind::None: return "Ori.";
    case CorruptionKind::Jitter: return "Jitt.";
    case CorruptionKind::Scale09: return "0.9";
    case CorruptionKind::Scale11: return "1.1";
    case CorruptionKind::Rotate90: return "90deg";
    case CorruptionKind::Rotate180: return "180deg";
  }
  return "?";
}

CorruptionSetting CorruptionSetting::parse(const std::string& name, double sigma, double clip) {
  CorruptionSetting s{CorruptionKind::None, sigma, clip};
  if (name == "none") s.kind = CorruptionKind::None;
  else if (name == "jitter") s.kind = CorruptionKind::Jitter;
  else if (name == "scale_0.9") s.kind = CorruptionKind::Scale09;
  else if (name == "scale_1.1") s.kind = CorruptionKind::Scale11;
  else if (name == "rotate_90") s.kind = CorruptionKind::Rotate90;
  else if (name == "rotate_180") s.kind = CorruptionKind::Rotate180;
  else throw ConfigError("unknown corruption '" + name + "'");
  return s;
}

std::vector<CorruptionSetting> default_corruptions(double sigma, double clip) {
  std::vector<CorruptionSetting> out;
  for (auto k : {CorruptionKind::None, CorruptionKind::Jitter, CorruptionKind::Scale09,
                 CorruptionKind::Scale11, CorruptionKind::Rotate90, CorruptionKind::Rotate180}) {
    out.push_back({k, sigma, clip});
  }
  return out;
}

PointCloud corrupt(const PointCloud& cloud, const CorruptionSetting& s, Rng& rng) {
  switch (s.kind) {
    case CorruptionKind::None: return cloud;
    case CorruptionKind::Jitter: return jitter(cloud, s.jitter_sigma, s.jitter_clip, rng);
    case CorruptionKind::Scale09: return uniform_scale(cloud, 0.9);
    case CorruptionKind::Scale11: return uniform_scale(cloud, 1.1);
    case CorruptionKind::Rotate90: return rotate_gravity_axis(cloud, std::numbers::pi / 2.0);
    case CorruptionKind::Rotate180: return rotate_gravity_axis(cloud, std::numbers::pi);
  }
  throw InvalidInput("unknown corruption kind");
}

std::vector<RobustnessRow> robustness_suite(const Classifier& classifier,
                                            const ParameterSet& params,
                                            std::span<const Sample> samples,
                                            std::span<const CorruptionSetting> settings,
                                            std::uint64_t seed) {
  if (samples.empty()) throw InvalidInput("robustness suite needs samples");
  std::vector<RobustnessRow> rows;
  const long n = static_cast<long>(samples.size());
  for (const auto& setting : settings) {
    long correct = 0;
#pragma omp parallel for reduction(+ : correct) schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      const PointCloud c = corrupt(samples[i].cloud, setting, rng);
      if (predict(classifier, params, c) == samples[i].label) ++correct;
    }
    rows.push_back({setting.label(), static_cast<double>(correct) / static_cast<double>(n)});
  }
  return rows;
}

std::string AblationToggles::label() const {
  if (!any()) return "none";
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(use_displacement, "D");
  add(use_transform, "M");
  add(use_dropout, "DP");
  add(use_mix, "Mix");
  return out;
}

AblationToggles AblationToggles::parse(const std::string& text) {
  AblationToggles t;
  if (text == "none") return t;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('+', start), text.size());
    const std::string part = text.substr(start, end - start);
    if (part == "D") t.use_displacement = true;
    else if (part == "M") t.use_transform = true;
    else if (part == "DP") t.use_dropout = true;
    else if (part == "Mix") t.use_mix = true;
    else throw ConfigError("unknown ablation component '" + part + "' in '" + text + "'");
    start = end + 1;
  }
  return t;
}

std::vector<AblationToggles> standard_ablation_models() {
  return {
      {false, false, false, false}, {true, false, false, false}, {false, true, false, false},
      {true, true, false, false},   {true, true, true, false},   {true, true, true, true},
  };
}

TrainConfig apply_toggles(const TrainConfig& base, const AblationToggles& t) {
  TrainConfig c = base;
  if (!t.any()) {
    c.mode = TrainingMode::Conventional;
    return c;
  }
  c.mode = TrainingMode::PointAugment;
  c.augmentor.use_displacement = t.use_displacement;
  c.augmentor.use_transform = t.use_transform;
  if (!t.use_dropout) c.augmentor.dropout_prob = 0.0;
  c.mixed_sampling = t.use_mix;
  return c;
}

std::vector<AblationRow> ablation_runner(const Dataset& dataset, const TrainConfig& base,
                                         std::span<const AblationToggles> toggles,
                                         std::span<const double> lambdas) {
  std::vector<AblationRow> rows;
  auto final_accuracy = [&](const TrainConfig& cfg) {
    const TrainingState s = train(dataset, cfg);
    return s.history.empty() ? 0.0 : s.history.back().test_accuracy;
  };
  for (const auto& t : toggles) {
    rows.push_back({t.label(), base.weights.lambda, final_accuracy(apply_toggles(base, t))});
  }
  for (double lambda : lambdas) {
    TrainConfig c = base;
    c.mode = TrainingMode::PointAugment;
    c.weights.lambda = lambda;
    rows.push_back({"lambda=" + fmt_double(lambda), lambda, final_accuracy(c)});
  }
  return rows;
}

void write_robustness_tsv(std::ostream& os, std::span<const RobustnessRow> rows) {
  os << "setting\taccuracy\n";
  for (const auto& r : rows) {
    os << r.setting << '\t';
    put_double(os, r.accuracy);
    os << '\n';
  }
}

void write_ablation_tsv(std::ostream& os, std::span<const AblationRow> rows) {
  os << "model\tlambda\taccuracy\n";
  for (const auto& r : rows) {
    os << r.label << '\t';
    put_double(os, r.lambda);
    os << '\t';
    put_double(os, r.accuracy);
    os << '\n';
  }
}

void write_retrieval_tsv(std::ostream& os, const RetrievalResult& result) {
  os << "query\taverage_precision\n";
  for (std::size_t i = 0; i < result.query.size(); ++i) {
    os << result.query[i] << '\t';
    put_double(os, result.average_precision[i]);
    os << '\n';
  }
  os << "mean\t";
  put_double(os, result.mean_ap);
  os << '\n';
}

}  // namespace pointaugment
