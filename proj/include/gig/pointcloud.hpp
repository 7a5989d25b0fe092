#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gig/ops.hpp"
#include "gig/rng.hpp"
#include "gig/tape.hpp"

namespace gig::geom {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const;
};

inline double dist2(const Vec3& a, const Vec3& b) { return (a - b).norm2(); }

struct PointCloud {
  std::vector<Vec3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

/// Tensor [n,3] <-> cloud conversions for tape graphs.
ad::Tensor cloud_tensor(const PointCloud& p);
PointCloud cloud_from_tensor(const std::vector<int>& shape,
                             const std::vector<double>& data);
inline PointCloud cloud_from_var(const ad::Var& v) {
  return cloud_from_tensor(v.shape(), v.value());
}

// Chamfer distance of Eq-3 form: symmetric mean of squared nearest-neighbor
// distances (no square root). Nearest-neighbor ties pick the lowest index.
double chamfer_distance(const PointCloud& a, const PointCloud& b);
ad::Var chamfer_distance(const ad::Var& a, const ad::Var& b);

// Earth-Mover distance: minimum-cost perfect matching under Euclidean cost,
// divided by n. Exact Hungarian for n <= 128; epsilon-scaling auction above
// (result <= optimal + n*eps_final, with eps_final chosen so the relative
// error is bounded by rel_err whenever the optimum is positive).
double emd(const PointCloud& a, const PointCloud& b);
double emd_exact(const PointCloud& a, const PointCloud& b);
double emd_auction(const PointCloud& a, const PointCloud& b,
                   double rel_err = 0.01);

/// k nearest other points by Euclidean distance, ties broken by index.
std::vector<std::vector<int>> knn(const PointCloud& p, int k);

/// Gaussian-of-Chamfer structural features, one column per kernel point set.
/// Neighborhoods enter as offsets relative to the center point.
/// points:[n,3], kernels:[L,m,3] -> [n,L].
ad::Var kernel_correlation(const ad::Var& points, const ad::Var& kernels,
                           const std::vector<std::vector<int>>& neighbors,
                           double sigma);

struct NormalizeTransform {
  Vec3 center{};
  double scale = 1.0;
};

/// Center at centroid and divide by the max radius. Single point maps to the
/// origin with scale 1.
PointCloud normalize_unit_sphere(const PointCloud& p,
                                 NormalizeTransform* transform = nullptr);
PointCloud denormalize(const PointCloud& p, const NormalizeTransform& t);

/// Area-weighted triangle selection + uniform barycentric sampling.
PointCloud sample_mesh_surface(const Mesh& m, int n, std::uint64_t seed);

PointCloud sphere_surface(double radius, int n, std::uint64_t seed);
PointCloud ellipsoid_surface(double a, double b, double c, int n,
                             std::uint64_t seed);
PointCloud box_surface(double hx, double hy, double hz, int n,
                       std::uint64_t seed);
PointCloud torus_surface(double major, double minor, int n, std::uint64_t seed);
/// family in {sphere, ellipsoid, box, torus}; params are the radii above.
PointCloud synthetic_shape(const std::string& family,
                           const std::vector<double>& params, int n,
                           std::uint64_t seed);

/// Keeps the keep_fraction of points with the largest projection onto
/// direction (at least min_points), preserving input order.
PointCloud crop_halfspace(const PointCloud& p, Vec3 direction,
                          double keep_fraction, int min_points);

}  // namespace gig::geom
