#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "scenebench/geometry.hpp"
#include "scenebench/random.hpp"

using namespace scenebench;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(lo, hi);
    const double y = rng.uniform(lo, hi);
    const double z = rng.uniform(lo, hi);
    pts.emplace_back(x, y, z);
  }
  return pts;
}

Mat3 random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

std::vector<Vec3> cube_corners(double side, const Vec3& offset = Vec3::Zero()) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) {
    pts.push_back(offset + side * Vec3((i & 1) ? 1 : 0, (i & 2) ? 1 : 0, (i & 4) ? 1 : 0));
  }
  return pts;
}

// brute-force oracle: lowest index among minimal squared distances
Neighbor brute_nearest(const Vec3& q, const std::vector<Vec3>& ref) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    const double dx = q.x() - ref[j].x(), dy = q.y() - ref[j].y(), dz = q.z() - ref[j].z();
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < best) {
      best = d2;
      idx = j;
    }
  }
  return {idx, std::sqrt(best)};
}

}  // namespace

TEST(VoxelDownsample, SinglePointIsKept) {
  PointCloud c({Vec3(0.3, -1.2, 4.5)});
  const auto out = voxel_downsample(c, 0.03);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.points[0], c.points[0]);
}

TEST(VoxelDownsample, SmallCubeCollapsesToCenter) {
  PointCloud c(cube_corners(0.01));
  const auto out = voxel_downsample(c, 0.03);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR((out.points[0] - Vec3::Constant(0.005)).norm(), 0.0, 1e-15);
}

TEST(VoxelDownsample, CountMatchesHashSetOracle) {
  PointCloud c(random_points(1000, 7));
  const Vec3 origin = Aabb::from_points(c.points).min;
  std::set<std::array<long long, 3>> occupied;
  for (const auto& p : c.points) {
    occupied.insert({static_cast<long long>(std::floor((p.x() - origin.x()) / 0.03)),
                     static_cast<long long>(std::floor((p.y() - origin.y()) / 0.03)),
                     static_cast<long long>(std::floor((p.z() - origin.z()) / 0.03))});
  }
  const auto out = voxel_downsample(c, 0.03);
  EXPECT_EQ(out.size(), occupied.size());
  EXPECT_LE(out.size(), c.size());
}

TEST(VoxelDownsample, CentroidsStayInsideTheirCell) {
  PointCloud c(random_points(2000, 11, -2.0, 3.0));
  const Vec3 origin = Aabb::from_points(c.points).min;
  const auto out = voxel_downsample(c, 0.1, origin);
  std::set<VoxelKey> keys;
  for (const auto& p : out.points) keys.insert(voxel_index(p, origin, 0.1));
  EXPECT_EQ(keys.size(), out.size());
}

TEST(VoxelDownsample, IdempotentForFixedOrigin) {
  PointCloud c(random_points(3000, 3));
  c.space = SpaceTag::shared_normalized;
  const Vec3 origin = Aabb::from_points(c.points).min;
  const auto once = voxel_downsample(c, 0.05, origin);
  const auto twice = voxel_downsample(once, 0.05, origin);
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once.points[i], twice.points[i]);
  EXPECT_EQ(twice.space, SpaceTag::shared_normalized);
}

TEST(VoxelDownsample, Errors) {
  EXPECT_THROW(voxel_downsample(PointCloud{}, 0.03), Error);
  PointCloud bad({Vec3(std::nan(""), 0, 0)});
  try {
    voxel_downsample(bad, 0.03);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidGeometry);
  }
}

TEST(EstimateNormals, PlaneGivesVerticalNormals) {
  Rng rng(5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
  const auto out = estimate_normals(PointCloud(pts), 10);
  ASSERT_TRUE(out.has_normals());
  for (const auto& n : out.normals) EXPECT_NEAR(std::abs(n.z()), 1.0, 1e-3);
}

TEST(EstimateNormals, SphereNormalsAreRadial) {
  Rng rng(9);
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) pts.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
  const auto out = estimate_normals(PointCloud(pts), 16);
  const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_GE(std::abs(out.normals[i].dot(pts[i])), cos5);
    // oriented toward the frame origin
    EXPECT_LE(out.normals[i].dot(pts[i]), 0.0);
  }
}

TEST(EstimateNormals, TooFewPoints) {
  PointCloud c(random_points(5, 1));
  try {
    estimate_normals(c, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientPoints);
  }
}

TEST(SharedNormalize, SymmetricCube) {
  PointCloud c(cube_corners(1.0));
  const auto n = shared_normalize(c, c);
  EXPECT_EQ(n.center, Vec3(0.5, 0.5, 0.5));
  EXPECT_EQ(n.sigma, 1.0);
  const Aabb box = Aabb::from_points(n.source.points);
  EXPECT_EQ(box.min, Vec3::Constant(-0.5));
  EXPECT_EQ(box.max, Vec3::Constant(0.5));
  EXPECT_EQ(n.source.space, SpaceTag::shared_normalized);
}

TEST(SharedNormalize, JointBoxByDirectMinMax) {
  PointCloud a(random_points(200, 2));
  a.points.push_back(Vec3(0, 0, 0));
  a.points.push_back(Vec3(1, 1, 1));
  PointCloud b(random_points(200, 4));
  for (auto& p : b.points) p.x() += 2.0;
  b.points.push_back(Vec3(2, 0, 0));
  b.points.push_back(Vec3(3, 1, 1));
  const auto n = shared_normalize(a, b);
  EXPECT_EQ(n.sigma, 3.0);
  EXPECT_EQ(n.center, Vec3(1.5, 0.5, 0.5));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec3 expect = (a.points[i] - n.center) / n.sigma;
    EXPECT_EQ(n.source.points[i], expect);
  }
  const Aabb joint = Aabb::from_points(n.source.points).merged(Aabb::from_points(n.target.points));
  EXPECT_NEAR(joint.max_side(), 1.0, 1e-9);
}

TEST(SharedNormalize, CoincidentPointsAreDegenerate) {
  PointCloud a({Vec3(1, 2, 3)});
  try {
    shared_normalize(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateExtent);
  }
}

TEST(ProjectToSO3, IdentityAndScaledRotation) {
  EXPECT_TRUE(project_to_so3(Mat3::Identity()).isApprox(Mat3::Identity(), 1e-15));
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = random_rotation(rng);
    EXPECT_LT((project_to_so3(1.01 * r) - r).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((project_to_so3(r) - r).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ProjectToSO3, ReflectionProjectsToNearestProperRotation) {
  Mat3 m = Eigen::Vector3d(1, 1, -1).asDiagonal();
  const Mat3 r = project_to_so3(m);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const double ours = (r - m).norm();
  // random-sampling lower bound over SO(3)
  Rng rng(99);
  double best_sampled = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100000; ++i) best_sampled = std::min(best_sampled, (random_rotation(rng) - m).norm());
  EXPECT_LE(ours, best_sampled + 1e-12);
}

TEST(ProjectToSO3, RejectsNonFinite) {
  Mat3 m = Mat3::Identity();
  m(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(project_to_so3(m), Error);
}

TEST(NearestNeighbors, SelfQueryMapsToItself) {
  PointCloud c(random_points(100, 8));
  const auto nn = nearest_neighbors(c, c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(nn[i].index, i);
    EXPECT_EQ(nn[i].distance, 0.0);
  }
}

TEST(NearestNeighbors, TiesBreakToLowestIndex) {
  PointCloud ref({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)});
  PointCloud q({Vec3(0, 0, 0), Vec3(1, 0, 0)});
  const auto nn = nearest_neighbors(q, ref);
  EXPECT_EQ(nn[0].index, 0u);
  EXPECT_EQ(nn[1].index, 0u);
}

TEST(NearestNeighbors, SinglePair) {
  const auto nn = nearest_neighbors(PointCloud({Vec3(0, 0, 0)}), PointCloud({Vec3(3, 4, 0)}));
  ASSERT_EQ(nn.size(), 1u);
  EXPECT_EQ(nn[0].index, 0u);
  EXPECT_DOUBLE_EQ(nn[0].distance, 5.0);
}

TEST(NearestNeighbors, EmptyReference) {
  EXPECT_THROW(nearest_neighbors(PointCloud({Vec3::Zero()}), PointCloud{}), Error);
}

TEST(NearestNeighbors, MatchesBruteForceOnRandomInstances) {
  Rng sizes(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const auto nq = static_cast<std::size_t>(sizes.uniform_int(1, 500));
    const auto nr = static_cast<std::size_t>(sizes.uniform_int(1, 500));
    PointCloud q(random_points(nq, 1000 + trial));
    PointCloud r(random_points(nr, 5000 + trial));
    // quantize some instances to force exact ties
    if (trial % 3 == 0) {
      for (auto& p : r.points) p = (p * 4.0).array().round() / 4.0;
      for (auto& p : q.points) p = (p * 4.0).array().round() / 4.0;
    }
    const auto nn = nearest_neighbors(q, r);
    for (std::size_t i = 0; i < nq; ++i) {
      const auto oracle = brute_nearest(q.points[i], r.points);
      ASSERT_EQ(nn[i].index, oracle.index);
      ASSERT_EQ(nn[i].distance, oracle.distance);
    }
  }
}

TEST(KdTree, KnnMatchesSortedBruteForce) {
  const auto ref = random_points(300, 17);
  const KdTree tree(ref);
  const Vec3 q(0.4, 0.6, 0.5);
  const auto got = tree.knn(q, 10);
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < ref.size(); ++j) all.emplace_back(squared_distance(q, ref[j]), j);
  std::sort(all.begin(), all.end());
  ASSERT_EQ(got.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(got[i].index, all[i].second);
}

TEST(SimilarityTransform, CompositionIsAssociativeAndInvertible) {
  Rng rng(44);
  auto random_sim = [&] {
    SimilarityTransform t;
    t.rotation = random_rotation(rng);
    t.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
    t.scale = rng.uniform(0.5, 2.0);
    return t;
  };
  for (int i = 0; i < 100; ++i) {
    const auto a = random_sim(), b = random_sim(), c = random_sim();
    const Vec3 p(rng.normal(), rng.normal(), rng.normal());
    EXPECT_LT((((a * b) * c).apply(p) - (a * (b * c)).apply(p)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((a.inverse().apply(a.apply(p)) - p).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).cwiseAbs().maxCoeff(), 1e-9);
    const auto back = SimilarityTransform::from_matrix(a.matrix());
    EXPECT_NEAR(back.scale, a.scale, 1e-12);
  }
}

TEST(TriangleMesh, Validation) {
  TriangleMesh m = make_box(Vec3::Zero(), Vec3::Ones());
  EXPECT_NO_THROW(m.validate());
  m.faces.push_back({0, 0, 1});
  EXPECT_THROW(m.validate(), Error);
  m.faces.back() = {0, 1, 99};
  EXPECT_THROW(m.validate(), Error);
}

TEST(SampleSurface, PointsLieOnBoxSurface) {
  const auto box = make_box(Vec3::Zero(), Vec3(1, 2, 3));
  EXPECT_NEAR(mesh_area(box), 2 * (2 + 3 + 6), 1e-12);
  const auto pc = sample_surface(box, 500, 1);
  for (const auto& p : pc.points) {
    const double d = std::min({std::abs(p.x()), std::abs(p.x() - 1), std::abs(p.y()),
                               std::abs(p.y() - 2), std::abs(p.z()), std::abs(p.z() - 3)});
    EXPECT_LT(d, 1e-12);
  }
  EXPECT_NO_THROW(pc.validate());
}
