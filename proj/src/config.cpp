#include "pointaugment/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pointaugment/errors.hpp"

namespace pointaugment {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a real number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : parse_list(v)) {
    const auto w = parse_u64(key, item);
    if (w == 0) throw ConfigError("config key '" + key + "': widths must be positive");
    out.push_back(w);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

#define PA_DOUBLE(expr)                                                         \
  Field {                                                                       \
    [](const RunConfig& c) { return fmt_double(c.expr); },                      \
        [](RunConfig& c, const std::string& k, const std::string& v) {          \
          c.expr = parse_double(k, v);                                          \
        }                                                                       \
  }
#define PA_SIZE(expr)                                                           \
  Field {                                                                       \
    [](const RunConfig& c) { return std::to_string(c.expr); },                  \
        [](RunConfig& c, const std::string& k, const std::string& v) {          \
          c.expr = static_cast<decltype(c.expr)>(parse_u64(k, v));              \
        }                                                                       \
  }
#define PA_BOOL(expr)                                                           \
  Field {                                                                       \
    [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); },  \
        [](RunConfig& c, const std::string& k, const std::string& v) {          \
          c.expr = parse_bool(k, v);                                            \
        }                                                                       \
  }
#define PA_WIDTHS(expr)                                                         \
  Field {                                                                       \
    [](const RunConfig& c) { return join(c.expr); },                            \
        [](RunConfig& c, const std::string& k, const std::string& v) {          \
          c.expr = parse_widths(k, v);                                          \
        }                                                                       \
  }

// Ordered so that serialize_config output groups related keys.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"mode", Field{[](const RunConfig& c) { return to_string(c.train.mode); },
                     [](RunConfig& c, const std::string&, const std::string& v) {
                       c.train.mode = parse_training_mode(v);
                     }}},
      {"augmentor_objective",
       Field{[](const RunConfig& c) { return to_string(c.train.objective); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               if (v == "bounded") {
                 c.train.objective = AugmentorObjective::Bounded;
               } else if (v == "naive") {
                 c.train.objective = AugmentorObjective::Naive;
               } else {
                 throw ConfigError("config key '" + k + "': expected bounded or naive");
               }
             }}},
      {"seed", PA_SIZE(train.seed)},
      {"epochs", PA_SIZE(train.epochs)},
      {"batch_size", PA_SIZE(train.batch_size)},
      {"augmentor_lr", PA_DOUBLE(train.augmentor_lr)},
      {"classifier_lr", PA_DOUBLE(train.classifier_lr)},
      {"lr_decay_rate", PA_DOUBLE(train.lr_decay_rate)},
      {"lr_decay_every", PA_SIZE(train.lr_decay_every)},
      {"augmentor_lr_decay", PA_BOOL(train.augmentor_lr_decay)},
      {"classifier_optimizer",
       Field{[](const RunConfig& c) { return to_string(c.train.classifier_optimizer); },
             [](RunConfig& c, const std::string&, const std::string& v) {
               c.train.classifier_optimizer = parse_optimizer_kind(v);
             }}},
      {"lambda", PA_DOUBLE(train.weights.lambda)},
      {"gamma", PA_DOUBLE(train.weights.gamma)},
      {"dropout_prob", PA_DOUBLE(train.augmentor.dropout_prob)},
      {"mixed_sampling", PA_BOOL(train.mixed_sampling)},
      {"use_transform", PA_BOOL(train.augmentor.use_transform)},
      {"use_displacement", PA_BOOL(train.augmentor.use_displacement)},
      {"noise_std", PA_DOUBLE(train.augmentor.noise_std)},
      {"feature_channels", PA_SIZE(train.augmentor.feature_channels)},
      {"augmentor_feature_hidden", PA_WIDTHS(train.augmentor.feature_hidden)},
      {"augmentor_transform_hidden", PA_WIDTHS(train.augmentor.transform_hidden)},
      {"augmentor_displacement_hidden", PA_WIDTHS(train.augmentor.displacement_hidden)},
      {"classifier_point_hidden", PA_WIDTHS(train.classifier.point_hidden)},
      {"classifier_global_dim", PA_SIZE(train.classifier.global_dim)},
      {"classifier_head_hidden", PA_WIDTHS(train.classifier.head_hidden)},
      {"classifier_feature_norm", PA_BOOL(train.classifier.feature_norm)},
      {"da_rotate", PA_BOOL(train.conventional.rotate)},
      {"da_scale_lo", PA_DOUBLE(train.conventional.scale_lo)},
      {"da_scale_hi", PA_DOUBLE(train.conventional.scale_hi)},
      {"da_jitter_sigma", PA_DOUBLE(train.conventional.jitter_sigma)},
      {"da_jitter_clip", PA_DOUBLE(train.conventional.jitter_clip)},
      {"n_points", PA_SIZE(n_points)},
      {"robustness_jitter_sigma", PA_DOUBLE(robustness_jitter_sigma)},
      {"robustness_jitter_clip", PA_DOUBLE(robustness_jitter_clip)},
      {"synth_classes",
       Field{[](const RunConfig& c) { return join(c.synth.classes); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               c.synth.classes = parse_list(v);
               if (c.synth.classes.empty()) throw ConfigError("config key '" + k + "' is empty");
             }}},
      {"synth_train_per_class", PA_SIZE(synth.train_per_class)},
      {"synth_test_per_class", PA_SIZE(synth.test_per_class)},
      {"synth_train_counts", PA_WIDTHS(synth.train_counts)},
      {"synth_points", PA_SIZE(synth.n_points)},
      {"synth_deformation", PA_DOUBLE(synth.deformation)},
  };
  return table;
}

#undef PA_DOUBLE
#undef PA_SIZE
#undef PA_BOOL
#undef PA_WIDTHS

const Field& find_field(const std::string& key) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const auto& [k, f] : fields()) m.emplace(k, &f);
    return m;
  }();
  const auto it = index.find(key);
  if (it == index.end()) throw ConfigError("unknown config key '" + key + "'");
  return *it->second;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (mode == TrainingMode::PointAugment && mixed_sampling && batch_size % 2 != 0) {
    throw ConfigError("batch_size must be even when mixed_sampling is enabled");
  }
  if (!(augmentor_lr > 0.0) || !(classifier_lr > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(lr_decay_rate > 0.0)) throw ConfigError("lr_decay_rate must be positive");
  if (weights.lambda < 0.0 || weights.gamma < 0.0) {
    throw ConfigError("lambda and gamma must be non-negative");
  }
  if (conventional.scale_lo <= 0.0 || conventional.scale_hi < conventional.scale_lo) {
    throw ConfigError("conventional DA scale range must satisfy 0 < lo <= hi");
  }
  if (conventional.jitter_sigma < 0.0 || conventional.jitter_clip < 0.0) {
    throw ConfigError("conventional DA jitter settings must be non-negative");
  }
  if (classifier.global_dim == 0) throw ConfigError("classifier_global_dim must be positive");
  augmentor.validate();
}

double TrainConfig::classifier_lr_at(std::size_t epoch) const {
  if (classifier_optimizer == OptimizerKind::SgdMomentum) {
    return cosine_lr(classifier_lr, epoch, epochs);
  }
  return step_decay_lr(classifier_lr, epoch, lr_decay_rate, lr_decay_every);
}

double TrainConfig::augmentor_lr_at(std::size_t epoch) const {
  return augmentor_lr_decay ? step_decay_lr(augmentor_lr, epoch, lr_decay_rate, lr_decay_every)
                            : augmentor_lr;
}

std::string to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::PointAugment: return "pointaugment";
    case TrainingMode::NoAugmentation: return "none";
    case TrainingMode::Conventional: return "conventional";
  }
  return "?";
}

std::string to_string(AugmentorObjective objective) {
  return objective == AugmentorObjective::Bounded ? "bounded" : "naive";
}

TrainingMode parse_training_mode(const std::string& text) {
  if (text == "pointaugment") return TrainingMode::PointAugment;
  if (text == "none") return TrainingMode::NoAugmentation;
  if (text == "conventional") return TrainingMode::Conventional;
  throw ConfigError("unknown training mode '" + text +
                    "' (expected pointaugment, none or conventional)");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, key, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

RunConfig desk_scale_config() {
  RunConfig c;
  c.n_points = 256;
  c.train.epochs = 30;
  c.train.augmentor_lr = 1e-4;
  c.train.augmentor.feature_channels = 16;
  c.train.augmentor.feature_hidden = {32};
  c.train.augmentor.transform_hidden = {32, 16};
  c.train.augmentor.displacement_hidden = {32, 16};
  c.train.classifier.point_hidden = {32};
  c.train.classifier.global_dim = 64;
  c.train.classifier.head_hidden = {32};
  c.train.classifier.feature_norm = true;
  return c;
}

}  // namespace pointaugment
