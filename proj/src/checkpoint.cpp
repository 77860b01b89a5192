#include "pointaugment/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pointaugment/errors.hpp"

namespace pointaugment {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void doubles(const std::vector<double>& xs) {
    u64(xs.size());
    raw(xs.data(), xs.size() * sizeof(double));
  }
  const std::string& bytes() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t pos, std::size_t end) : buf_(buf), pos_(pos), end_(end) {}
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    if (n > (end_ - pos_) / sizeof(double)) throw LoadError("checkpoint is truncated");
    std::vector<double> xs(n);
    std::memcpy(xs.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return xs;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw LoadError("checkpoint is truncated");
  }
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  const std::string& buf_;
  std::size_t pos_;
  std::size_t end_;
};

void write_optimizer(Writer& w, const OptimizerState& s) {
  w.str(to_string(s.kind));
  w.u64(s.steps);
  w.doubles(s.first);
  w.doubles(s.second);
}

OptimizerState read_optimizer(Reader& r) {
  OptimizerState s;
  try {
    s.kind = parse_optimizer_kind(r.str());
  } catch (const std::invalid_argument& e) {
    throw LoadError(std::string("checkpoint optimizer: ") + e.what());
  }
  s.steps = r.u64();
  s.first = r.doubles();
  s.second = r.doubles();
  return s;
}

}  // namespace

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  Writer w;
  w.u32(kVersion);
  RunConfig rc;
  rc.train = state.config;
  w.str(serialize_config(rc));
  w.u64(state.num_classes);
  w.u64(state.epoch);
  w.doubles(state.augmentor.values);
  w.doubles(state.classifier.values);
  write_optimizer(w, state.augmentor_optimizer);
  write_optimizer(w, state.classifier_optimizer);
  w.str(state.rng.serialize());
  w.u64(state.pool.capacity());
  w.u64(state.pool.size());
  for (const auto& [id, cloud] : state.pool.entries()) {
    w.str(id);
    w.u64(cloud.size());
    w.doubles(std::vector<double>(cloud.points().values().begin(), cloud.points().values().end()));
  }
  w.u64(state.history.size());
  for (const auto& m : state.history) {
    w.u64(m.epoch);
    for (double v : {m.train_accuracy, m.test_accuracy, m.augmentor_loss, m.classifier_loss, m.rho,
                     m.xi, m.feature_gap}) {
      w.f64(v);
    }
  }
  const std::string& body = w.bytes();
  const std::uint64_t sum = fnv1a(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(body.data()), body.size()));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw LoadError("not a checkpoint file: " + path.string());
  }
  const std::size_t body_end = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + body_end, sizeof stored);
  const std::uint64_t sum = fnv1a(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(buf.data() + sizeof kMagic), body_end - sizeof kMagic));
  if (sum != stored) throw LoadError("checkpoint checksum mismatch: " + path.string());

  Reader r(buf, sizeof kMagic, body_end);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  TrainingState s;
  try {
    s.config = parse_config(r.str()).train;
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint config: ") + e.what());
  }
  s.num_classes = r.u64();
  s.epoch = r.u64();
  s.augmentor.values = r.doubles();
  s.classifier.values = r.doubles();
  s.augmentor_optimizer = read_optimizer(r);
  s.classifier_optimizer = read_optimizer(r);
  s.rng = Rng::deserialize(r.str());
  s.pool = ReplayPool(r.u64());
  const std::uint64_t pool_size = r.u64();
  for (std::uint64_t i = 0; i < pool_size; ++i) {
    std::string id = r.str();
    const std::uint64_t n = r.u64();
    std::vector<double> xs = r.doubles();
    if (xs.size() != n * 3) throw LoadError("checkpoint pool entry '" + id + "' is malformed");
    try {
      s.pool.put(id, PointCloud(Matrix(n, 3, std::move(xs))));
    } catch (const std::invalid_argument& e) {
      throw LoadError(std::string("checkpoint pool: ") + e.what());
    }
  }
  const std::uint64_t rows = r.u64();
  for (std::uint64_t i = 0; i < rows; ++i) {
    EpochMetrics m;
    m.epoch = r.u64();
    m.train_accuracy = r.f64();
    m.test_accuracy = r.f64();
    m.augmentor_loss = r.f64();
    m.classifier_loss = r.f64();
    m.rho = r.f64();
    m.xi = r.f64();
    m.feature_gap = r.f64();
    s.history.push_back(m);
  }
  if (!r.done()) throw LoadError("checkpoint has trailing data");
  return s;
}

}  // namespace pointaugment
