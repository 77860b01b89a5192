#include "pointaugment/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pointaugment/errors.hpp"

namespace pointaugment {

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) {
  if (points_.cols() != 3) throw InvalidInput("point cloud must have 3 columns");
}

PointCloud::PointCloud(std::initializer_list<std::array<double, 3>> rows)
    : points_(rows.size(), 3) {
  std::size_t i = 0;
  for (const auto& r : rows) {
    for (std::size_t a = 0; a < 3; ++a) points_(i, a) = r[a];
    ++i;
  }
}

double PointCloud::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = points_.row(i);
    m = std::max(m, std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]));
  }
  return m;
}

std::array<double, 3> PointCloud::centroid() const {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  if (size() == 0) return c;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) c[a] += points_(i, a);
  }
  for (double& v : c) v /= static_cast<double>(size());
  return c;
}

AffineAugmentation AffineAugmentation::identity(std::size_t n_points) {
  return {Matrix::identity(3), Matrix(n_points, 3)};
}

PointCloud normalize_unit_ball(const PointCloud& cloud) {
  if (cloud.size() == 0) throw InvalidInput("normalize_unit_ball: empty cloud");
  if (!cloud.all_finite()) throw InvalidInput("normalize_unit_ball: non-finite coordinate");

  const auto c = cloud.centroid();
  double magnitude = 0.0;
  Matrix centered(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t a = 0; a < 3; ++a) {
      centered(i, a) = cloud(i, a) - c[a];
      magnitude = std::max(magnitude, std::abs(cloud(i, a)));
    }
  }
  PointCloud out(std::move(centered));
  const double spread = out.max_norm();
  // Identical points can leave rounding residue after centering.
  if (spread <= 1e-12 * std::max(1.0, magnitude)) {
    out.points().fill(0.0);
    return out;
  }
  for (double& v : out.points().values()) v /= spread;
  return out;
}

PointCloud apply_affine(const PointCloud& cloud, const AffineAugmentation& aug) {
  const Matrix& m = aug.shape_transform;
  const Matrix& d = aug.displacement;
  if (m.rows() != 3 || m.cols() != 3) throw InvalidInput("apply_affine: M must be 3x3");
  if (d.rows() != cloud.size() || d.cols() != 3) {
    throw InvalidInput("apply_affine: displacement rows must equal the number of points");
  }
  Matrix out(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double x = cloud(i, 0);
    const double y = cloud(i, 1);
    const double z = cloud(i, 2);
    for (std::size_t c = 0; c < 3; ++c) {
      out(i, c) = x * m(0, c) + y * m(1, c) + z * m(2, c) + d(i, c);
    }
  }
  return PointCloud(std::move(out));
}

PointCloud rotate_gravity_axis(const PointCloud& cloud, double angle, Axis gravity) {
  if (!std::isfinite(angle)) throw InvalidInput("rotate_gravity_axis: non-finite angle");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  // (u, v) are the two axes spanning the plane orthogonal to gravity, ordered
  // so that u -> v -> gravity is right-handed: rotating u by +90 deg gives v.
  const auto g = static_cast<std::size_t>(gravity);
  const std::size_t u = (g + 1) % 3;
  const std::size_t v = (g + 2) % 3;
  PointCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double pu = cloud(i, u);
    const double pv = cloud(i, v);
    out(i, u) = c * pu - s * pv;
    out(i, v) = s * pu + c * pv;
  }
  return out;
}

PointCloud uniform_scale(const PointCloud& cloud, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw InvalidInput("uniform_scale: ratio must be positive");
  }
  PointCloud out = cloud;
  for (double& v : out.points().values()) v *= ratio;
  return out;
}

PointCloud jitter(const PointCloud& cloud, double sigma, double clip, Rng& rng) {
  if (sigma < 0.0 || clip < 0.0) throw InvalidInput("jitter: sigma and clip must be >= 0");
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  for (double& v : out.points().values()) {
    v += std::clamp(rng.normal(0.0, sigma), -clip, clip);
  }
  return out;
}

PointCloud conventional_da(const PointCloud& cloud, Rng& rng, const ConventionalDAParams& p) {
  PointCloud out = cloud;
  if (p.rotate) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out = rotate_gravity_axis(out, angle, p.gravity);
  }
  if (p.scale_lo != 1.0 || p.scale_hi != 1.0) {
    out = uniform_scale(out, rng.uniform(p.scale_lo, p.scale_hi));
  }
  return jitter(out, p.jitter_sigma, p.jitter_clip, rng);
}

}  // namespace pointaugment
