#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>

#include "pointaugment/matrix.hpp"
#include "pointaugment/random.hpp"

namespace pointaugment {

/// An ordered set of N points stored as an N x 3 matrix of row vectors.
class PointCloud {
 public:
  PointCloud() : points_(0, 3) {}
  explicit PointCloud(Matrix points);
  PointCloud(std::initializer_list<std::array<double, 3>> rows);

  std::size_t size() const { return points_.rows(); }
  const Matrix& points() const { return points_; }
  Matrix& points() { return points_; }
  double operator()(std::size_t i, std::size_t axis) const { return points_(i, axis); }
  double& operator()(std::size_t i, std::size_t axis) { return points_(i, axis); }

  bool all_finite() const { return points_.all_finite(); }
  double max_norm() const;
  std::array<double, 3> centroid() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  Matrix points_;
};

/// P' = P * M + D. shape_transform is 3 x 3, displacement is N x 3.
struct AffineAugmentation {
  Matrix shape_transform = Matrix::identity(3);
  Matrix displacement;

  static AffineAugmentation identity(std::size_t n_points);
};

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Center on the centroid and scale so the farthest point has norm 1.
/// A cloud with zero spread maps to all zeros. Throws InvalidInput on
/// non-finite coordinates or an empty cloud.
PointCloud normalize_unit_ball(const PointCloud& cloud);

PointCloud apply_affine(const PointCloud& cloud, const AffineAugmentation& aug);

/// Right-handed rotation about the gravity axis (y-up by default).
PointCloud rotate_gravity_axis(const PointCloud& cloud, double angle_radians,
                               Axis gravity = Axis::Y);

PointCloud uniform_scale(const PointCloud& cloud, double ratio);

/// Adds clip(N(0, sigma), -clip, +clip) independently to every coordinate.
PointCloud jitter(const PointCloud& cloud, double sigma, double clip, Rng& rng);

struct ConventionalDAParams {
  bool rotate = true;
  double scale_lo = 0.8;
  double scale_hi = 1.25;
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
  Axis gravity = Axis::Y;

  static ConventionalDAParams disabled() { return {false, 1.0, 1.0, 0.0, 0.0, Axis::Y}; }
  friend bool operator==(const ConventionalDAParams&, const ConventionalDAParams&) = default;
};

/// Random rotation about the gravity axis with angle in [0, 2pi), then uniform
/// scaling by s in [scale_lo, scale_hi], then jitter. Draws happen in that order.
PointCloud conventional_da(const PointCloud& cloud, Rng& rng, const ConventionalDAParams& params);

}  // namespace pointaugment
