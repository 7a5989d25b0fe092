#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gig/pointcloud.hpp"
#include "gig/rng.hpp"
#include "testing_util.hpp"

using namespace gig;
using geom::PointCloud;
using geom::Vec3;

namespace {

PointCloud random_cloud(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  PointCloud p;
  p.points.reserve(n);
  for (int i = 0; i < n; ++i)
    p.points.push_back({rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)});
  return p;
}

// Literal Eq-3 translation; the per-point minima are summed in ascending
// order, matching the implementation's permutation-invariance convention.
double chamfer_oracle(const PointCloud& a, const PointCloud& b) {
  std::vector<double> m1, m2;
  for (const auto& x : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : b.points) best = std::min(best, geom::dist2(x, y));
    m1.push_back(best);
  }
  for (const auto& y : b.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : a.points) best = std::min(best, geom::dist2(x, y));
    m2.push_back(best);
  }
  std::sort(m1.begin(), m1.end());
  std::sort(m2.begin(), m2.end());
  const double t1 = std::accumulate(m1.begin(), m1.end(), 0.0);
  const double t2 = std::accumulate(m2.begin(), m2.end(), 0.0);
  return t1 / (2.0 * a.size()) + t2 / (2.0 * b.size());
}

// All-permutation matching oracle (n <= 8).
double emd_oracle(const PointCloud& a, const PointCloud& b) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i)
      c += std::sqrt(geom::dist2(a.points[i], b.points[perm[i]]));
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

PointCloud rotate_z(const PointCloud& p, double angle) {
  PointCloud out;
  const double c = std::cos(angle), s = std::sin(angle);
  for (const auto& pt : p.points)
    out.points.push_back({c * pt.x - s * pt.y, s * pt.x + c * pt.y, pt.z});
  return out;
}

}  // namespace

TEST(Chamfer, SelfDistanceIsZero) {
  Rng rng(1);
  PointCloud p = random_cloud(20, rng);
  EXPECT_EQ(geom::chamfer_distance(p, p), 0.0);
}

TEST(Chamfer, SinglePairArithmetic) {
  PointCloud a({{0, 0, 0}});
  PointCloud b({{1, 0, 0}});
  EXPECT_DOUBLE_EQ(geom::chamfer_distance(a, b), 1.0);
}

TEST(Chamfer, TwoVsOneWorkedExample) {
  PointCloud a({{0, 0, 0}, {2, 0, 0}});
  PointCloud b({{1, 0, 0}});
  EXPECT_DOUBLE_EQ(geom::chamfer_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(chamfer_oracle(a, b), 1.0);
}

TEST(Chamfer, MatchesExhaustiveOracleExactly) {
  for (int seed = 0; seed < 30; ++seed) {
    Rng rng(500 + seed);
    PointCloud a = random_cloud(1 + static_cast<int>(rng.index(32)), rng);
    PointCloud b = random_cloud(1 + static_cast<int>(rng.index(32)), rng);
    EXPECT_EQ(geom::chamfer_distance(a, b), chamfer_oracle(a, b));
  }
}

TEST(Chamfer, SymmetricAndPermutationInvariant) {
  Rng rng(2);
  PointCloud a = random_cloud(17, rng), b = random_cloud(23, rng);
  EXPECT_EQ(geom::chamfer_distance(a, b), geom::chamfer_distance(b, a));
  PointCloud ap = a;
  rng.shuffle(ap.points);
  EXPECT_EQ(geom::chamfer_distance(ap, b), geom::chamfer_distance(a, b));
}

TEST(Chamfer, RotationInvariance) {
  Rng rng(3);
  PointCloud a = random_cloud(15, rng), b = random_cloud(15, rng);
  const double d0 = geom::chamfer_distance(a, b);
  const double d1 = geom::chamfer_distance(rotate_z(a, 0.83), rotate_z(b, 0.83));
  EXPECT_NEAR(d0, d1, 1e-9);
  EXPECT_NEAR(geom::emd_exact(a, b),
              geom::emd_exact(rotate_z(a, 0.83), rotate_z(b, 0.83)), 1e-9);
}

TEST(Chamfer, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  auto fn = [](ad::Tape& t, const std::vector<ad::Var>& in) {
    return geom::chamfer_distance(in[0], in[1]);
  };
  auto res = testutil::check_gradients(
      fn, {testutil::random_tensor({6, 3}, rng), testutil::random_tensor({5, 3}, rng)});
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst;
}

TEST(Chamfer, EmptyCloudThrows) {
  PointCloud a({{0, 0, 0}}), empty;
  EXPECT_THROW(geom::chamfer_distance(a, empty), std::invalid_argument);
}

TEST(Emd, IdenticalCloudsZero) {
  Rng rng(5);
  PointCloud a = random_cloud(12, rng);
  EXPECT_EQ(geom::emd(a, a), 0.0);
}

TEST(Emd, SinglePair) {
  PointCloud a({{0, 0, 0}}), b({{1, 0, 0}});
  EXPECT_DOUBLE_EQ(geom::emd(a, b), 1.0);
}

TEST(Emd, TwoPointWorkedExample) {
  PointCloud a({{0, 0, 0}, {2, 0, 0}});
  PointCloud b({{1, 0, 0}, {3, 0, 0}});
  EXPECT_DOUBLE_EQ(geom::emd(a, b), 1.0);
  EXPECT_DOUBLE_EQ(emd_oracle(a, b), 1.0);
}

TEST(Emd, ExactMatchesPermutationOracle) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    const int n = 2 + static_cast<int>(rng.index(7));  // up to 8
    PointCloud a = random_cloud(n, rng), b = random_cloud(n, rng);
    EXPECT_NEAR(geom::emd_exact(a, b), emd_oracle(a, b), 1e-9);
  }
}

TEST(Emd, AuctionWithinOnePercentOfExact) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(1300 + seed);
    const int n = 16 + static_cast<int>(rng.index(49));  // up to 64
    PointCloud a = random_cloud(n, rng), b = random_cloud(n, rng);
    const double exact = geom::emd_exact(a, b);
    const double approx = geom::emd_auction(a, b, 0.01);
    EXPECT_GE(approx, exact - 1e-12);
    EXPECT_LE(approx, exact * 1.01 + 1e-12);
  }
}

TEST(Emd, SymmetricPermutationInvariantAndUpperBounded) {
  Rng rng(6);
  PointCloud a = random_cloud(10, rng), b = random_cloud(10, rng);
  const double d = geom::emd(a, b);
  EXPECT_NEAR(geom::emd(b, a), d, 1e-12);
  PointCloud ap = a;
  rng.shuffle(ap.points);
  EXPECT_NEAR(geom::emd(ap, b), d, 1e-12);
  // Any explicit permutation's mean cost upper-bounds the optimum.
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 100; ++t) {
    rng.shuffle(perm);
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      c += std::sqrt(geom::dist2(a.points[i], b.points[perm[i]]));
    EXPECT_LE(d, c / a.size() + 1e-12);
  }
}

TEST(Emd, UnequalSizesThrow) {
  PointCloud a({{0, 0, 0}}), b({{0, 0, 0}, {1, 1, 1}});
  EXPECT_THROW(geom::emd(a, b), std::invalid_argument);
}

TEST(Knn, CollinearPoints) {
  PointCloud p({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  auto nb = geom::knn(p, 1);
  EXPECT_EQ(nb[0][0], 1);
  EXPECT_EQ(nb[1][0], 0);  // tie between 0 and 2 resolves to the lower index
  EXPECT_EQ(nb[2][0], 1);
}

TEST(Knn, AllOthersWhenKIsNMinusOne) {
  Rng rng(7);
  PointCloud p = random_cloud(6, rng);
  auto nb = geom::knn(p, 5);
  for (int i = 0; i < 6; ++i) {
    std::vector<int> sorted = nb[i];
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect;
    for (int j = 0; j < 6; ++j)
      if (j != i) expect.push_back(j);
    EXPECT_EQ(sorted, expect);
  }
}

TEST(Knn, MatchesBruteForceSortOracle) {
  Rng rng(8);
  PointCloud p = random_cloud(50, rng);
  auto nb = geom::knn(p, 8);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < 50; ++j)
      if (j != i) cand.emplace_back(geom::dist2(p.points[i], p.points[j]), j);
    std::sort(cand.begin(), cand.end());
    for (int t = 0; t < 8; ++t) EXPECT_EQ(nb[i][t], cand[t].second);
  }
}

TEST(Knn, KTooLargeThrows) {
  PointCloud p({{0, 0, 0}, {1, 0, 0}});
  EXPECT_THROW(geom::knn(p, 2), std::invalid_argument);
}

TEST(KernelCorrelation, PerfectMatchGivesOne) {
  // Kernel points equal to the neighborhood offsets -> d_CD = 0 -> exp(0) = 1.
  ad::Tape tape;
  PointCloud p({{0, 0, 0}, {0.1, 0, 0}, {0, 0.2, 0}});
  auto nb = geom::knn(p, 2);
  ad::Tensor kernels({1, 2, 3});
  for (int t = 0; t < 2; ++t) {
    const Vec3 off = p.points[nb[0][t]] - p.points[0];
    kernels[3 * t] = off.x;
    kernels[3 * t + 1] = off.y;
    kernels[3 * t + 2] = off.z;
  }
  ad::Var out = geom::kernel_correlation(tape.leaf(geom::cloud_tensor(p)),
                                         tape.leaf(kernels), nb, 0.1);
  EXPECT_EQ(out.value()[0], 1.0);
}

TEST(KernelCorrelation, PlugInValueAtTwoSigmaSquared) {
  // Single neighbor offset at distance d from the single kernel point with
  // d_CD = 2 sigma^2 gives exp(-1).
  ad::Tape tape;
  const double sigma = 0.2;
  // d_CD = (1/2)*d2 + (1/2)*d2 = d2; want d2 = 2 sigma^2.
  const double d = std::sqrt(2.0) * sigma;
  PointCloud p({{0, 0, 0}, {d, 0, 0}});
  std::vector<std::vector<int>> nb = {{1}, {0}};
  ad::Var out = geom::kernel_correlation(
      tape.leaf(geom::cloud_tensor(p)), tape.leaf(ad::Tensor({1, 1, 3})), nb,
      sigma);
  EXPECT_NEAR(out.value()[0], std::exp(-1.0), 1e-15);
}

TEST(KernelCorrelation, MatchesChamferCompositionOracle) {
  Rng rng(9);
  const int n = 12, k = 4, L = 3, m = 5;
  const double sigma = 0.3;
  PointCloud p = random_cloud(n, rng);
  auto nb = geom::knn(p, k);
  ad::Tape tape;
  ad::Tensor kernels = testutil::random_tensor({L, m, 3}, rng, -0.2, 0.2);
  ad::Var out = geom::kernel_correlation(tape.leaf(geom::cloud_tensor(p)),
                                         tape.leaf(kernels), nb, sigma);
  for (int i = 0; i < n; ++i) {
    PointCloud offsets;
    for (int t = 0; t < k; ++t)
      offsets.points.push_back(p.points[nb[i][t]] - p.points[i]);
    for (int l = 0; l < L; ++l) {
      PointCloud kernel;
      for (int u = 0; u < m; ++u)
        kernel.points.push_back({kernels[(l * m + u) * 3],
                                 kernels[(l * m + u) * 3 + 1],
                                 kernels[(l * m + u) * 3 + 2]});
      const double expected =
          std::exp(-chamfer_oracle(offsets, kernel) / (2.0 * sigma * sigma));
      EXPECT_EQ(out.value()[i * L + l], expected) << "i=" << i << " l=" << l;
    }
  }
}

TEST(KernelCorrelation, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  PointCloud p = random_cloud(7, rng);
  auto nb = geom::knn(p, 3);
  auto fn = [&nb](ad::Tape& t, const std::vector<ad::Var>& in) {
    Rng wrng(3);
    return testutil::weighted_sum(t, geom::kernel_correlation(in[0], in[1], nb, 0.4),
                                 wrng);
  };
  auto res = testutil::check_gradients(
      fn, {geom::cloud_tensor(p), testutil::random_tensor({2, 4, 3}, rng, -0.3, 0.3)});
  EXPECT_LT(res.max_rel_err, 1e-4) << res.worst;
}

TEST(KernelCorrelation, NonPositiveSigmaThrows) {
  ad::Tape tape;
  PointCloud p({{0, 0, 0}, {1, 0, 0}});
  std::vector<std::vector<int>> nb = {{1}, {0}};
  EXPECT_THROW(geom::kernel_correlation(tape.leaf(geom::cloud_tensor(p)),
                                        tape.leaf(ad::Tensor({1, 1, 3})), nb, 0.0),
               std::invalid_argument);
}

TEST(Normalize, AlreadyNormalizedUnchanged) {
  Rng rng(11);
  PointCloud p = geom::normalize_unit_sphere(random_cloud(40, rng));
  PointCloud q = geom::normalize_unit_sphere(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(p.points[i].x, q.points[i].x, 1e-12);
    EXPECT_NEAR(p.points[i].y, q.points[i].y, 1e-12);
    EXPECT_NEAR(p.points[i].z, q.points[i].z, 1e-12);
  }
}

TEST(Normalize, ScaleAndShiftInvariance) {
  Rng rng(12);
  PointCloud p = random_cloud(25, rng);
  PointCloud moved = p;
  for (auto& pt : moved.points) pt = pt * 7.0 + Vec3{3.0, -2.0, 11.0};
  PointCloud a = geom::normalize_unit_sphere(p);
  PointCloud b = geom::normalize_unit_sphere(moved);
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_NEAR((a.points[i] - b.points[i]).norm(), 0.0, 1e-12);
}

TEST(Normalize, FarthestPointHasUnitNorm) {
  Rng rng(13);
  geom::NormalizeTransform t;
  PointCloud p = geom::normalize_unit_sphere(random_cloud(30, rng, -5, 5), &t);
  double maxnorm = 0.0;
  for (const auto& pt : p.points) maxnorm = std::max(maxnorm, pt.norm());
  EXPECT_NEAR(maxnorm, 1.0, 1e-12);
  EXPECT_GT(t.scale, 0.0);
  // Round-trips through the returned transform.
  PointCloud back = geom::denormalize(p, t);
  PointCloud orig = geom::normalize_unit_sphere(back);
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_NEAR((orig.points[i] - p.points[i]).norm(), 0.0, 1e-9);
}

TEST(Normalize, SinglePointMapsToOrigin) {
  geom::NormalizeTransform t;
  PointCloud p = geom::normalize_unit_sphere(PointCloud({{3, 4, 5}}), &t);
  EXPECT_EQ(p.points[0].norm(), 0.0);
  EXPECT_EQ(t.scale, 1.0);
}

TEST(Shapes, SphereNorms) {
  PointCloud p = geom::sphere_surface(1.0, 200, 42);
  for (const auto& pt : p.points) EXPECT_NEAR(pt.norm(), 1.0, 1e-12);
}

TEST(Shapes, BoxTouchesFaces) {
  PointCloud p = geom::box_surface(1.0, 1.0, 1.0, 200, 43);
  for (const auto& pt : p.points) {
    const double m = std::max({std::abs(pt.x), std::abs(pt.y), std::abs(pt.z)});
    EXPECT_DOUBLE_EQ(m, 1.0);
  }
}

TEST(Shapes, TorusImplicitEquation) {
  PointCloud p = geom::torus_surface(1.0, 0.3, 200, 44);
  for (const auto& pt : p.points) {
    const double ring = std::sqrt(pt.x * pt.x + pt.y * pt.y) - 1.0;
    EXPECT_NEAR(ring * ring + pt.z * pt.z, 0.09, 1e-9);
  }
}

TEST(Shapes, InvalidParamsThrow) {
  EXPECT_THROW(geom::sphere_surface(-1.0, 10, 0), std::invalid_argument);
  EXPECT_THROW(geom::synthetic_shape("ellipsoid", {1.0}, 10, 0),
               std::invalid_argument);
  EXPECT_THROW(geom::synthetic_shape("cone", {1.0}, 10, 0), std::invalid_argument);
}

TEST(MeshSampling, SingleTriangleContainment) {
  geom::Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  PointCloud p = geom::sample_mesh_surface(m, 100, 7);
  for (const auto& pt : p.points) {
    EXPECT_NEAR(pt.z, 0.0, 1e-15);
    EXPECT_GE(pt.x, -1e-12);
    EXPECT_GE(pt.y, -1e-12);
    EXPECT_LE(pt.x + pt.y, 1.0 + 1e-12);
  }
}

TEST(MeshSampling, AreaWeightedCounts) {
  geom::Mesh m;
  // Area 0.5 triangle and area 1.5 triangle: proportions 1:3.
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {10, 0, 0}, {13, 0, 0}, {10, 1, 0}};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  const int n = 10000;
  PointCloud p = geom::sample_mesh_surface(m, n, 8);
  int first = 0;
  for (const auto& pt : p.points)
    if (pt.x < 5.0) ++first;
  // Binomial with p=0.25: mean 2500, sigma ~43.3.
  EXPECT_NEAR(first, 2500, 3 * 43.4);
}

TEST(MeshSampling, DeterministicPerSeed) {
  geom::Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  PointCloud a = geom::sample_mesh_surface(m, 50, 9);
  PointCloud b = geom::sample_mesh_surface(m, 50, 9);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ((a.points[i] - b.points[i]).norm(), 0.0);
}

TEST(MeshSampling, DegenerateMeshThrows) {
  geom::Mesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  m.faces = {{0, 1, 2}};
  EXPECT_THROW(geom::sample_mesh_surface(m, 10, 0), std::invalid_argument);
}

TEST(Crop, KeepAllIsIdentity) {
  Rng rng(14);
  PointCloud p = random_cloud(20, rng);
  PointCloud q = geom::crop_halfspace(p, {0, 0, 1}, 1.0, 1);
  ASSERT_EQ(q.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    EXPECT_EQ((p.points[i] - q.points[i]).norm(), 0.0);
}

TEST(Crop, KeepsTopThird) {
  PointCloud p({{0, 0, -1}, {0, 0, 0}, {0, 0, 1}});
  PointCloud q = geom::crop_halfspace(p, {0, 0, 1}, 1.0 / 3.0, 1);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q.points[0].z, 1.0);
}

TEST(Crop, MatchesSortOracle) {
  Rng rng(15);
  PointCloud p = random_cloud(40, rng);
  const Vec3 dir{0.3, -0.5, 0.8};
  PointCloud q = geom::crop_halfspace(p, dir, 0.5, 1);
  const double dn = dir.norm();
  std::vector<std::pair<double, int>> proj;
  for (int i = 0; i < 40; ++i)
    proj.emplace_back(p.points[i].dot(dir) * (1.0 / dn), i);
  std::sort(proj.begin(), proj.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> expect_idx;
  for (int i = 0; i < 20; ++i) expect_idx.push_back(proj[i].second);
  std::sort(expect_idx.begin(), expect_idx.end());
  ASSERT_EQ(q.size(), 20u);
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ((q.points[i] - p.points[expect_idx[i]]).norm(), 0.0);
}

TEST(Crop, TooSmallCloudThrows) {
  PointCloud p({{0, 0, 0}});
  EXPECT_THROW(geom::crop_halfspace(p, {0, 0, 1}, 0.5, 2), std::invalid_argument);
}
