#include "pointaugment/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "pointaugment/errors.hpp"

namespace fs = std::filesystem;

namespace pointaugment {

namespace {

constexpr const char* kManifestHeader = "sample_id\tsplit\tclass";

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

bool valid_sample_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == '/' || c == '\\' || c == ' ' || c == '\t' || c == '\n';
  });
}

PointCloud read_xyz(const fs::path& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw LoadError("sample '" + id + "': cannot open points file " + path.string());
  std::vector<double> coords;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int axis = 0; axis < 3; ++axis) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v)) {
        throw LoadError("sample '" + id + "': malformed or non-finite coordinate at line " +
                        std::to_string(line_no));
      }
      coords.push_back(v);
      p = next;
    }
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p != end) {
      throw LoadError("sample '" + id + "': expected 3 values at line " + std::to_string(line_no));
    }
  }
  if (coords.empty()) throw LoadError("sample '" + id + "': points file is empty");
  const std::size_t n = coords.size() / 3;
  return PointCloud(Matrix(n, 3, std::move(coords)));
}

void write_double(std::ostream& os, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, p - buf);
}

}  // namespace

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  throw InvalidInput("unknown split '" + text + "'");
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [s](const Sample& x) { return x.split == s; }));
}

std::vector<Sample> Dataset::subset(Split s) const {
  std::vector<Sample> out;
  for (const Sample& x : samples) {
    if (x.split == s) out.push_back(x);
  }
  return out;
}

void Dataset::validate() const {
  std::set<std::string> ids;
  for (const Sample& s : samples) {
    if (s.label >= num_classes()) throw InvalidInput("sample '" + s.id + "': label out of range");
    if (!ids.insert(s.id).second) throw InvalidInput("duplicate sample id '" + s.id + "'");
    if (s.cloud.size() != samples.front().cloud.size()) {
      throw InvalidInput("sample '" + s.id + "': point count differs from the rest");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PointCloud resample_points(const PointCloud& cloud, std::size_t n, Rng& rng) {
  const std::size_t have = cloud.size();
  if (have == 0) throw InvalidInput("resample_points: empty cloud");
  if (n == 0) throw InvalidInput("resample_points: target size must be positive");
  std::vector<std::size_t> picks;
  if (have > n) {
    std::vector<std::size_t> idx(have);
    for (std::size_t i = 0; i < have; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(have - i)]);
    picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(picks.begin(), picks.end());
  } else {
    picks.resize(have);
    for (std::size_t i = 0; i < have; ++i) picks[i] = i;
    while (picks.size() < n) picks.push_back(rng.index(have));
  }
  Matrix out(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < 3; ++a) out(i, a) = cloud(picks[i], a);
  }
  return PointCloud(std::move(out));
}

Dataset load_dataset(const fs::path& root, std::size_t n_points, std::uint64_t seed) {
  if (n_points == 0) throw InvalidInput("load_dataset: n_points must be positive");
  Dataset ds;
  {
    std::ifstream in(root / "classes.txt");
    if (!in) throw LoadError("missing file " + (root / "classes.txt").string());
    std::string line;
    while (std::getline(in, line)) {
      line = strip_cr(line);
      if (!line.empty()) ds.class_names.push_back(line);
    }
    if (ds.class_names.empty()) throw LoadError("classes.txt lists no classes");
  }
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
    if (!class_index.emplace(ds.class_names[i], i).second) {
      throw LoadError("classes.txt: duplicate class '" + ds.class_names[i] + "'");
    }
  }

  std::ifstream manifest(root / "manifest.tsv");
  if (!manifest) throw LoadError("missing file " + (root / "manifest.tsv").string());
  std::string line;
  if (!std::getline(manifest, line) || strip_cr(line) != kManifestHeader) {
    throw LoadError("manifest.tsv: header must be 'sample_id<TAB>split<TAB>class'");
  }
  std::size_t row = 1;
  std::set<std::string> seen;
  while (std::getline(manifest, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::string where = "manifest.tsv row " + std::to_string(row);
    if (fields.size() != 3) throw LoadError(where + ": expected 3 tab-separated fields");
    Sample s;
    s.id = fields[0];
    if (!valid_sample_id(s.id)) throw LoadError(where + ": invalid sample_id '" + s.id + "'");
    if (!seen.insert(s.id).second) throw LoadError(where + ": duplicate sample_id '" + s.id + "'");
    if (fields[1] == "train") {
      s.split = Split::Train;
    } else if (fields[1] == "test") {
      s.split = Split::Test;
    } else {
      throw LoadError("sample '" + s.id + "': unknown split '" + fields[1] + "'");
    }
    const auto it = class_index.find(fields[2]);
    if (it == class_index.end()) {
      throw LoadError("sample '" + s.id + "': unknown class '" + fields[2] + "'");
    }
    s.label = it->second;
    ds.samples.push_back(std::move(s));
  }

  // Files are independent; each sample draws from its own seeded stream so
  // the result does not depend on scheduling.
  std::vector<std::string> errors(ds.samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Sample& s = ds.samples[i];
    try {
      const PointCloud raw = read_xyz(root / "points" / (s.id + ".xyz"), s.id);
      Rng rng(derive_seed(seed, i));
      const PointCloud fixed = raw.size() == n_points ? raw : resample_points(raw, n_points, rng);
      s.cloud = normalize_unit_ball(fixed);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw LoadError(e);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root / "points");
  {
    std::ofstream out(root / "classes.txt");
    for (const auto& name : ds.class_names) out << name << '\n';
    if (!out) throw std::runtime_error("failed writing classes.txt");
  }
  std::ofstream manifest(root / "manifest.tsv");
  manifest << kManifestHeader << '\n';
  for (const Sample& s : ds.samples) {
    if (!valid_sample_id(s.id)) throw InvalidInput("invalid sample id '" + s.id + "'");
    manifest << s.id << '\t' << to_string(s.split) << '\t' << ds.class_names.at(s.label) << '\n';
    std::ofstream pts(root / "points" / (s.id + ".xyz"));
    for (std::size_t i = 0; i < s.cloud.size(); ++i) {
      write_double(pts, s.cloud(i, 0));
      pts << ' ';
      write_double(pts, s.cloud(i, 1));
      pts << ' ';
      write_double(pts, s.cloud(i, 2));
      pts << '\n';
    }
    if (!pts) throw std::runtime_error("failed writing points for sample '" + s.id + "'");
  }
  if (!manifest) throw std::runtime_error("failed writing manifest.tsv");
}

Primitive parse_primitive(const std::string& name) {
  if (name == "sphere") return Primitive::Sphere;
  if (name == "cube") return Primitive::Cube;
  if (name == "cylinder") return Primitive::Cylinder;
  if (name == "cone") return Primitive::Cone;
  throw ConfigError("unknown primitive '" + name + "' (expected sphere, cube, cylinder or cone)");
}

std::string to_string(Primitive p) {
  switch (p) {
    case Primitive::Sphere: return "sphere";
    case Primitive::Cube: return "cube";
    case Primitive::Cylinder: return "cylinder";
    case Primitive::Cone: return "cone";
  }
  return "?";
}

PointCloud sample_primitive_surface(Primitive p, std::size_t n, Rng& rng) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Matrix pts(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0, z = 0.0;
    switch (p) {
      case Primitive::Sphere: {
        double r = 0.0;
        do {
          x = rng.normal(0.0, 1.0);
          y = rng.normal(0.0, 1.0);
          z = rng.normal(0.0, 1.0);
          r = std::sqrt(x * x + y * y + z * z);
        } while (r < 1e-12);
        x /= r;
        y /= r;
        z /= r;
        break;
      }
      case Primitive::Cube: {
        const std::size_t face = rng.index(6);
        const double u = rng.uniform(-1.0, 1.0);
        const double v = rng.uniform(-1.0, 1.0);
        const double s = face % 2 == 0 ? 1.0 : -1.0;
        if (face < 2) {
          x = s, y = u, z = v;
        } else if (face < 4) {
          x = u, y = s, z = v;
        } else {
          x = u, y = v, z = s;
        }
        break;
      }
      case Primitive::Cylinder: {
        // Lateral area 4pi, caps 2pi in total.
        const double theta = rng.uniform(0.0, two_pi);
        if (rng.uniform(0.0, 1.0) < 2.0 / 3.0) {
          x = std::cos(theta), z = std::sin(theta), y = rng.uniform(-1.0, 1.0);
        } else {
          const double r = std::sqrt(rng.uniform(0.0, 1.0));
          x = r * std::cos(theta), z = r * std::sin(theta);
          y = rng.bernoulli(0.5) ? 1.0 : -1.0;
        }
        break;
      }
      case Primitive::Cone: {
        // Apex at y = 1, unit-radius base at y = -1. Lateral area pi*sqrt(5), base pi.
        const double theta = rng.uniform(0.0, two_pi);
        const double lateral = std::sqrt(5.0) / (1.0 + std::sqrt(5.0));
        if (rng.uniform(0.0, 1.0) < lateral) {
          const double t = std::sqrt(rng.uniform(0.0, 1.0));
          x = t * std::cos(theta), z = t * std::sin(theta), y = 1.0 - 2.0 * t;
        } else {
          const double r = std::sqrt(rng.uniform(0.0, 1.0));
          x = r * std::cos(theta), z = r * std::sin(theta), y = -1.0;
        }
        break;
      }
    }
    pts(i, 0) = x;
    pts(i, 1) = y;
    pts(i, 2) = z;
  }
  return PointCloud(std::move(pts));
}

Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.classes.empty()) throw ConfigError("synthetic config names no classes");
  if (config.n_points == 0) throw ConfigError("synthetic n_points must be positive");
  if (!config.train_counts.empty() && config.train_counts.size() != config.classes.size()) {
    throw ConfigError("train_counts must list one count per class");
  }
  if (config.deformation < 0.0) throw ConfigError("deformation must be >= 0");
  std::vector<Primitive> prims;
  for (const auto& name : config.classes) prims.push_back(parse_primitive(name));

  Dataset ds;
  ds.class_names = config.classes;
  Rng rng(seed);
  const double stretch = 0.3 * config.deformation;
  const double sigma = 0.02 * config.deformation;
  for (std::size_t c = 0; c < prims.size(); ++c) {
    const std::size_t n_train =
        config.train_counts.empty() ? config.train_per_class : config.train_counts[c];
    for (Split sp : {Split::Train, Split::Test}) {
      const std::size_t count = sp == Split::Train ? n_train : config.test_per_class;
      for (std::size_t k = 0; k < count; ++k) {
        PointCloud pc = sample_primitive_surface(prims[c], config.n_points, rng);
        double s[3];
        for (double& v : s) v = rng.uniform(1.0 - stretch, 1.0 + stretch);
        for (std::size_t i = 0; i < pc.size(); ++i) {
          for (std::size_t a = 0; a < 3; ++a) {
            pc(i, a) = pc(i, a) * s[a] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
          }
        }
        char id[96];
        std::snprintf(id, sizeof id, "%s_%s_%04zu", config.classes[c].c_str(),
                      to_string(sp).c_str(), k);
        ds.samples.push_back({id, normalize_unit_ball(pc), c, sp});
      }
    }
  }
  return ds;
}

Dataset split(const Dataset& dataset, double train_fraction, std::uint64_t seed,
              std::vector<std::string>* warnings) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput("split: train_fraction must lie in (0, 1)");
  }
  Dataset out = dataset;
  Rng rng(seed);
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      if (out.samples[i].label == c) members.push_back(i);
    }
    if (members.size() < 2) {
      for (std::size_t i : members) out.samples[i].split = Split::Train;
      if (warnings && !members.empty()) {
        warnings->push_back("class '" + dataset.class_names[c] +
                            "' has fewer than 2 samples; assigned to train");
      }
      continue;
    }
    for (std::size_t i = members.size(); i-- > 1;) std::swap(members[i], members[rng.index(i + 1)]);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    for (std::size_t k = 0; k < members.size(); ++k) {
      out.samples[members[k]].split = k < n_train ? Split::Train : Split::Test;
    }
  }
  return out;
}

}  // namespace pointaugment
