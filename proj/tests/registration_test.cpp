#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "recovery_fixture.hpp"
#include "scenebench/random.hpp"
#include "scenebench/registration.hpp"

using namespace scenebench;

namespace {

constexpr double kPi = std::numbers::pi;

PointCloud random_cloud(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  return c;
}

PointCloud cube_corners(const Vec3& offset = Vec3::Zero()) {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.points.push_back(Vec3(i & 1, (i >> 1) & 1, (i >> 2) & 1) + offset);
  return c;
}

double rotation_angle_deg(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

// Normalized, downsampled pair the way robust_icp prepares it.
std::pair<PointCloud, PointCloud> prepared(const PointCloud& s, const PointCloud& t, double v = 0.03) {
  const auto sn = shared_normalize(s, t);
  const Vec3 origin = Aabb::from_points(sn.source.points).merged(Aabb::from_points(sn.target.points)).min;
  return {voxel_downsample(sn.source, v, origin), voxel_downsample(sn.target, v, origin)};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no scenebench::Error thrown";
  return ErrorCode::IoError;
}

bool is_proper_rotation(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6 && r.determinant() > 0.0;
}

}  // namespace

// trimmed symmetric chamfer ---------------------------------------------------

TEST(TrimmedChamfer, IdenticalCloudsScoreZero) {
  Rng rng(1);
  const auto a = random_cloud(rng, 300);
  EXPECT_EQ(trimmed_symmetric_chamfer(a, a, 0.2, 2000, 0), 0.0);
}

TEST(TrimmedChamfer, OutliersExactlyTrimmed) {
  // 80 clean grid points and a twin grid shifted by 0.01, so every clean NN
  // distance is exactly the shift; 20 outliers sit 100 away. ceil(0.2*100) = 20
  // is precisely the outlier count.
  PointCloud clean, shifted;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 8; ++j) {
      clean.points.emplace_back(i, j, 0.0);
      shifted.points.emplace_back(i + 0.01, j, 0.0);
    }
  PointCloud a = clean;
  for (int k = 0; k < 20; ++k) a.points.emplace_back(100.0 + 3.0 * k, 100.0, 100.0);
  const double untrimmed_clean = trimmed_symmetric_chamfer(clean, shifted, 0.0, 2000, 0);
  EXPECT_NEAR(trimmed_symmetric_chamfer(a, shifted, 0.2, 2000, 0), untrimmed_clean, 1e-9);
  EXPECT_NEAR(untrimmed_clean, 0.01, 1e-12);
  EXPECT_GT(trimmed_symmetric_chamfer(a, shifted, 0.0, 2000, 0), 1.0);
}

TEST(TrimmedChamfer, CubeCornersBruteForce) {
  const PointCloud a = cube_corners();
  const PointCloud b = cube_corners(Vec3(0.1, 0, 0));
  // brute force over both directions
  double sum = 0.0;
  int twins = 0;
  for (const auto* pair : {&a, &b}) {
    const PointCloud& from = *pair;
    const PointCloud& to = pair == &a ? b : a;
    for (std::size_t i = 0; i < 8; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < 8; ++j) {
        const double d = (from.points[i] - to.points[j]).norm();
        if (d < best) best = d, arg = j;
      }
      sum += best;
      twins += arg == i;
    }
  }
  EXPECT_EQ(twins, 16);
  EXPECT_NEAR(trimmed_symmetric_chamfer(a, b, 0.0, 2000, 0), sum / 16.0, 1e-15);
  EXPECT_NEAR(trimmed_symmetric_chamfer(a, b, 0.0, 2000, 0), 0.1 * twins / 16.0, 1e-12);
}

TEST(TrimmedChamfer, SubsamplingIsSeeded) {
  Rng rng(2);
  const auto a = random_cloud(rng, 5000), b = random_cloud(rng, 4000);
  const double x = trimmed_symmetric_chamfer(a, b, 0.2, 500, 7);
  EXPECT_EQ(x, trimmed_symmetric_chamfer(a, b, 0.2, 500, 7));
  EXPECT_NE(x, trimmed_symmetric_chamfer(a, b, 0.2, 500, 8));
}

TEST(TrimmedChamfer, Errors) {
  EXPECT_EQ(code_of([] { trimmed_symmetric_chamfer(PointCloud{}, cube_corners(), 0.2, 10, 0); }),
            ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { trimmed_symmetric_chamfer(cube_corners(), cube_corners(), 1.0, 10, 0); }),
            ErrorCode::DomainError);
}

// closed form -----------------------------------------------------------------

TEST(Umeyama, RecoversSimilarity) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto src = random_cloud(rng, 50, -1, 1);
    SimilarityTransform truth;
    truth.rotation = project_to_so3(Mat3::Random());
    truth.translation = Vec3(rng.normal(), rng.normal(), rng.normal());
    truth.scale = rng.uniform(0.5, 2.0);
    const auto dst = transform_cloud(src, truth);
    const auto est = umeyama(src.points, dst.points, true);
    EXPECT_LT((est.rotation - truth.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((est.translation - truth.translation).norm(), 1e-9);
    EXPECT_NEAR(est.scale, truth.scale, 1e-9);
    EXPECT_EQ(umeyama(src.points, dst.points, false).scale, 1.0);
  }
}

TEST(Umeyama, CoincidentSourceKeepsUnitScale) {
  const std::vector<Vec3> src(5, Vec3(1, 1, 1));
  const std::vector<Vec3> dst(5, Vec3(2, 3, 4));
  const auto t = umeyama(src, dst, true);
  EXPECT_EQ(t.scale, 1.0);
  EXPECT_LT((t.apply(src[0]) - dst[0]).norm(), 1e-12);
  EXPECT_TRUE(is_proper_rotation(t.rotation));
}

// point-to-point ----------------------------------------------------------------

TEST(IcpPointToPoint, RecoversSmallShift) {
  Rng rng(4);
  const auto src = random_cloud(rng, 2000);
  PointCloud dst = src;
  for (auto& p : dst.points) p += Vec3(0.01, 0, 0);
  const auto r = icp_point_to_point(src, dst, SimilarityTransform::identity(), 30, 0.075, false);
  EXPECT_LT((r.transform.translation - Vec3(0.01, 0, 0)).norm(), 1e-4);
  EXPECT_EQ(r.fitness, 1.0);
}

TEST(IcpPointToPoint, RecoversScale) {
  const auto src = sample_surface(make_box(Vec3(-0.25, -0.2, -0.15), Vec3(0.25, 0.2, 0.15)), 3000, 5);
  PointCloud dst = src;
  for (auto& p : dst.points) p *= 1.2;
  const auto r = icp_point_to_point(src, dst, SimilarityTransform::identity(), 100, 0.3, true);
  EXPECT_NEAR(r.transform.scale, 1.2, 1e-3);
}

TEST(IcpPointToPoint, DisjointCloudsHaveNoOverlap) {
  Rng rng(6);
  const auto a = random_cloud(rng, 100);
  const auto b = random_cloud(rng, 100, 11, 12);
  EXPECT_EQ(code_of([&] { icp_point_to_point(a, b, SimilarityTransform::identity(), 10, 0.075, false); }),
            ErrorCode::NoOverlap);
}

TEST(IcpPointToPoint, RecordedRmseIsMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = fixtures::make_recovery_case(seed, 1500);
    const auto [s, t] = prepared(c.source, c.target);
    for (bool scale : {false, true}) {
      const auto r = icp_point_to_point(s, t, SimilarityTransform::identity(), 40, 0.075, scale);
      ASSERT_EQ(r.history.size(), static_cast<std::size_t>(r.iterations) + 1);
      for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
      EXPECT_GE(r.fitness, 0.0);
      EXPECT_LE(r.fitness, 1.0);
      EXPECT_GE(r.rmse, 0.0);
    }
  }
}

// point-to-plane ------------------------------------------------------------------

TEST(TukeyLoss, WeightAndRho) {
  EXPECT_EQ(tukey_weight(0.0, 0.045), 1.0);
  EXPECT_EQ(tukey_weight(0.045, 0.045), 0.0);
  EXPECT_EQ(tukey_weight(-0.045, 0.045), 0.0);
  EXPECT_EQ(tukey_weight(1.0, 0.045), 0.0);
  EXPECT_NEAR(tukey_weight(0.5, 1.0), 0.5625, 1e-15);
  EXPECT_EQ(tukey_rho(0.0, 1.0), 0.0);
  EXPECT_NEAR(tukey_rho(1.0 - 1e-9, 1.0), 1.0 / 6.0, 1e-12);
  EXPECT_EQ(tukey_rho(2.0, 1.0), 1.0 / 6.0);
}

TEST(IcpPointToPlane, PlanarOffsetConvergesFast) {
  PointCloud target;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      target.points.emplace_back(i * 0.025, j * 0.025, 0.0);
      target.normals.emplace_back(0, 0, 1);
    }
  PointCloud source;
  Rng rng(7);
  for (int k = 0; k < 500; ++k) source.points.emplace_back(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), 0.005);
  const auto r = icp_point_to_plane_tukey(source, target, SimilarityTransform::identity(), 50, 0.03, 0.045);
  EXPECT_LE(r.iterations, 5);
  double worst = 0.0;
  for (const auto& p : source.points) worst = std::max(worst, std::abs(r.transform.apply(p).z()));
  EXPECT_LE(worst, 1e-5);
}

TEST(IcpPointToPlane, GrossOutliersHaveNoInfluence) {
  const TriangleMesh box = make_box(Vec3(-0.3, -0.2, -0.25), Vec3(0.3, 0.2, 0.25));
  SimilarityTransform motion;
  motion.rotation = axis_rotation(1, 0.02) * axis_rotation(0, -0.01);
  motion.translation = Vec3(0.004, -0.003, 0.002);
  PointCloud target = transform_cloud(sample_surface(box, 4000, 8), motion);
  target = estimate_normals(target, 16);
  PointCloud clean = sample_surface(box, 2000, 9);
  clean.normals.clear();
  PointCloud dirty = clean;
  for (std::size_t i = 0; i < dirty.size(); i += 10) dirty.points[i] += Vec3(0.0, 1.0, 0.0);

  const auto a = icp_point_to_plane_tukey(clean, target, SimilarityTransform::identity(), 30, 0.03, 0.045);
  const auto b = icp_point_to_plane_tukey(dirty, target, SimilarityTransform::identity(), 30, 0.03, 0.045);
  EXPECT_LT((a.transform.matrix() - b.transform.matrix()).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(rotation_angle_deg(a.transform.rotation, motion.rotation), 0.1);
  EXPECT_NEAR(b.fitness, 0.9, 1e-9);
}

TEST(IcpPointToPlane, MissingNormals) {
  Rng rng(10);
  const auto a = random_cloud(rng, 200);
  EXPECT_EQ(code_of([&] { icp_point_to_plane_tukey(a, a, SimilarityTransform::identity(), 5, 0.03, 0.045); }),
            ErrorCode::MissingNormals);
  const auto r = icp_point_to_plane_tukey(a, a, SimilarityTransform::identity(), 5, 0.03, 0.045, 0.045);
  EXPECT_EQ(r.fitness, 1.0);
}

TEST(IcpPointToPlane, ObjectiveIsMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = fixtures::make_recovery_case(seed, 1500);
    const auto sn = shared_normalize(c.source, c.target);
    const auto target = estimate_normals(sn.target, 16);
    SimilarityTransform near = SimilarityTransform::identity();
    try {
      const auto r = icp_point_to_plane_tukey(sn.source, target, near, 30, 0.03, 0.045, std::nullopt, 1e-7, true);
      for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoOverlap);
    }
  }
}

// validation -------------------------------------------------------------------

TEST(ValidateTransform, Cases) {
  auto ok = validate_transform(SimilarityTransform::identity(), true);
  ASSERT_TRUE(std::holds_alternative<SimilarityTransform>(ok));
  EXPECT_EQ(std::get<SimilarityTransform>(ok).matrix(), Mat4::Identity());

  SimilarityTransform reflect;
  reflect.rotation = Vec3(-1, 1, 1).asDiagonal();
  EXPECT_TRUE(std::holds_alternative<ValidationFailure>(validate_transform(reflect, true)));
  EXPECT_TRUE(std::holds_alternative<ValidationFailure>(validate_transform(reflect, false)));

  SimilarityTransform far;
  far.translation = Vec3(10, 0, 0);
  EXPECT_TRUE(std::holds_alternative<ValidationFailure>(validate_transform(far, true)));

  SimilarityTransform nan;
  nan.translation.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(std::holds_alternative<ValidationFailure>(validate_transform(nan, false)));

  // a slightly inflated rotation block: rejected when rigid, projected otherwise
  SimilarityTransform drift;
  drift.rotation = axis_rotation(1, 0.3) * 1.01;
  EXPECT_TRUE(std::holds_alternative<ValidationFailure>(validate_transform(drift, true)));
  auto projected = validate_transform(drift, false);
  ASSERT_TRUE(std::holds_alternative<SimilarityTransform>(projected));
  EXPECT_LT((std::get<SimilarityTransform>(projected).rotation - axis_rotation(1, 0.3)).cwiseAbs().maxCoeff(), 1e-9);
}

// configuration and pipeline ----------------------------------------------------

TEST(IcpConfig, IterationSplit) {
  EXPECT_EQ(iteration_split(40), std::make_pair(20, 20));
  EXPECT_EQ(iteration_split(12), std::make_pair(10, 10));
  EXPECT_EQ(iteration_split(60), std::make_pair(30, 30));
  EXPECT_EQ(iteration_split(25), std::make_pair(12, 13));
  EXPECT_EQ(iteration_split(1), std::make_pair(10, 10));
}

TEST(IcpConfig, RejectsBadValues) {
  IcpConfig c;
  c.keep_top_yaw = 9;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.trim_ratio = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.voxel_size = -1;
  EXPECT_THROW(c.validate(), Error);
  IcpConfig{}.validate();
}

TEST(YawSweep, QuarterTurnRecovered) {
  const auto c = fixtures::make_recovery_case(3, 3000);
  const SimilarityTransform quarter{axis_rotation(1, kPi / 2), Vec3::Zero(), 1.0};
  const auto [s, t] = prepared(c.source, transform_cloud(c.source, quarter));
  const auto sweep = yaw_sweep_init(s, t, IcpConfig{});
  EXPECT_EQ(sweep.selected_yaw_deg, 90.0);
  EXPECT_LT(rotation_angle_deg(sweep.init.rotation, quarter.rotation), 2.0);
  EXPECT_EQ(sweep.seed_runs, 3u);
  EXPECT_FALSE(sweep.flagged);
}

TEST(YawSweep, IdentityAndInstrumentation) {
  const auto c = fixtures::make_recovery_case(4, 3000);
  const auto [s, t] = prepared(c.source, c.source);
  for (std::size_t keep : {1u, 3u, 8u}) {
    IcpConfig cfg;
    cfg.keep_top_yaw = keep;
    const auto sweep = yaw_sweep_init(s, t, cfg);
    EXPECT_EQ(sweep.seed_runs, keep);
    EXPECT_EQ(sweep.prescores.size(), 8u);
    EXPECT_EQ(sweep.selected_yaw_deg, 0.0);
    EXPECT_LT((sweep.init.matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(YawSweep, AllSeedsFailingIsFlagged) {
  Rng rng(11);
  const auto a = random_cloud(rng, 300, 0.0, 0.1);
  const auto b = random_cloud(rng, 300, 0.9, 1.0);
  IcpConfig cfg;
  cfg.center_init = false;
  const auto sweep = yaw_sweep_init(a, b, cfg);
  EXPECT_TRUE(sweep.flagged);
  EXPECT_EQ(sweep.init.translation, Vec3::Zero());
  EXPECT_EQ(sweep.seed_runs, 3u);
}

TEST(RobustIcp, SelfAlignmentIsIdentity) {
  const auto c = fixtures::make_recovery_case(5);
  for (bool scale : {false, true}) {
    IcpConfig cfg;
    cfg.estimate_scale = scale;
    const auto r = robust_icp(c.source, c.source, cfg);
    EXPECT_EQ(r.provenance, StageProvenance::fine);
    EXPECT_EQ(r.fitness, 1.0);
    EXPECT_LT((r.transform.matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(RobustIcp, KnownTransformRecovery) {
  // yaw 135 deg, scale 1.1, |t| = 0.2
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    auto c = fixtures::make_recovery_case(seed);
    const PointCloud base = transform_cloud(c.target, c.truth.inverse());
    c.truth.rotation = axis_rotation(1, 135.0 * kPi / 180.0);
    c.truth.scale = 1.1;
    c.truth.translation = Vec3(0.12, -0.1, 0.12).normalized() * 0.2;
    c.target = transform_cloud(base, c.truth);
    IcpConfig cfg;
    cfg.estimate_scale = true;
    const auto r = robust_icp(c.source, c.target, cfg);
    const auto e = fixtures::recovery_error(r, c.truth);
    EXPECT_LT(e.rotation_deg, 1.0) << seed;
    EXPECT_LT(e.translation, 0.01) << seed;
    EXPECT_LT(e.scale, 0.01) << seed;
  }
}

TEST(RobustIcp, RawTransformMapsRawSourceOntoTarget) {
  const auto c = fixtures::make_recovery_case(6);
  IcpConfig cfg;
  cfg.estimate_scale = true;
  const auto r = robust_icp(c.source, c.target, cfg);
  const auto raw = r.raw_transform();
  EXPECT_LT((raw.matrix() - c.truth.matrix()).cwiseAbs().maxCoeff(), 0.02);
}

TEST(RobustIcp, DeterministicAndProperRotation) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const auto c = fixtures::make_recovery_case(seed, 2000);
    IcpConfig cfg;
    cfg.estimate_scale = seed % 2 == 0;
    const auto a = robust_icp(c.source, c.target, cfg);
    const auto b = robust_icp(c.source, c.target, cfg);
    EXPECT_EQ(a.transform.matrix(), b.transform.matrix());
    EXPECT_EQ(a.fitness, b.fitness);
    EXPECT_EQ(a.rmse, b.rmse);
    EXPECT_EQ(a.history, b.history);
    EXPECT_TRUE(is_proper_rotation(a.transform.rotation));
    for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_LE(a.history[i], a.history[i - 1]);
  }
}

TEST(RobustIcp, FallbackTotality) {
  Rng rng(12);
  const auto cloud = random_cloud(rng, 500);
  const std::vector<Vec3> same(50, Vec3(0.3, 0.3, 0.3));
  PointCloud with_nan = cloud;
  with_nan.points[7].y() = std::numeric_limits<double>::quiet_NaN();

  const auto expect_identity = [](const IcpResult& r) {
    EXPECT_EQ(r.provenance, StageProvenance::identity_fallback);
    EXPECT_EQ(r.transform.matrix(), Mat4::Identity());
    EXPECT_FALSE(r.failure.empty());
    EXPECT_GE(r.fitness, 0.0);
    EXPECT_LE(r.fitness, 1.0);
  };
  IcpConfig cfg;
  expect_identity(robust_icp(PointCloud{}, cloud, cfg));
  expect_identity(robust_icp(PointCloud(same), PointCloud(same), cfg));
  expect_identity(robust_icp(with_nan, cloud, cfg));
  IcpConfig bad = cfg;
  bad.voxel_size = 0.0;
  expect_identity(robust_icp(cloud, cloud, bad));

  // far apart without centroid seeding: nothing ever overlaps
  const auto near_origin = random_cloud(rng, 400, 0.0, 0.1);
  const auto far_away = random_cloud(rng, 400, 10.0, 10.1);
  IcpConfig plain = cfg;
  plain.center_init = false;
  expect_identity(robust_icp(near_origin, far_away, plain));

  // reflection injected as the initial guess of an otherwise disjoint pair
  SimilarityTransform reflection;
  reflection.rotation = Vec3(-1, 1, 1).asDiagonal();
  plain.init_override = reflection;
  expect_identity(robust_icp(near_origin, far_away, plain));

  // reflection injected on an overlapping pair: estimators return proper rotations
  const auto scene = fixtures::make_recovery_case(7, 2000);
  IcpConfig inj = cfg;
  inj.init_override = reflection;
  const auto r = robust_icp(scene.source, scene.source, inj);
  if (r.provenance != StageProvenance::identity_fallback) EXPECT_TRUE(is_proper_rotation(r.transform.rotation));
}

TEST(RobustIcp, CoarseFallbackWhenFineFindsNothing) {
  const auto c = fixtures::make_recovery_case(8, 2000);
  IcpConfig cfg;
  cfg.fine_p2l_threshold_factor = 1e-9;
  cfg.fine_p2p_threshold_factor = 1e-9;
  cfg.estimate_scale = true;
  // independent samples never come within 3e-11 of each other
  const auto r = robust_icp(c.source, c.target, cfg);
  EXPECT_EQ(r.provenance, StageProvenance::coarse_fallback);
  EXPECT_TRUE(is_proper_rotation(r.transform.rotation));
  EXPECT_LT(fixtures::recovery_error(r, c.truth).rotation_deg, 2.0);
}

// dual normalization --------------------------------------------------------------

TEST(DualNormalization, MinmaxPrescaleIsTwo) {
  EXPECT_EQ(minmax_branch_transform(-0.5, 0.5).scale, 2.0);
  EXPECT_EQ(minmax_branch_transform(-0.5, 0.5).translation, Vec3::Zero());
  const auto t = minmax_branch_transform(0.0, 4.0);
  EXPECT_EQ(t.apply(Vec3(0, 2, 4)), Vec3(-1, 0, 1));
  EXPECT_THROW(minmax_branch_transform(1.0, 1.0), Error);
}

TEST(DualNormalization, AabbBranchSpansUnitBox) {
  Rng rng(13);
  const auto c = random_cloud(rng, 200, 3.0, 5.0);
  const auto box = Aabb::from_points(transform_cloud(c, aabb_branch_transform(c)).points);
  EXPECT_NEAR(box.max_side(), 2.0, 1e-12);
  EXPECT_LT(box.center().norm(), 1e-12);
}

TEST(DualNormalization, IdenticalScenesTieTowardMinmax) {
  const auto c = fixtures::make_recovery_case(9);
  const auto d = dual_normalization_align(c.source, c.source, IcpConfig{}, {-0.5, 0.5});
  EXPECT_EQ(d.result.selected_branch, NormalizationBranch::minmax);
  EXPECT_EQ(d.fscore_minmax, 100.0);
  EXPECT_EQ(d.fscore_aabb, 100.0);
  EXPECT_EQ(d.minmax_prescale, 2.0);
  EXPECT_LT((d.result.transform.matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DualNormalization, OffsetPredictionSelectsRecenteredBranch) {
  const auto c = fixtures::make_recovery_case(10);
  PointCloud pred = c.source;
  for (auto& p : pred.points) p += Vec3(0.6, 0.0, 0.4);
  IcpConfig cfg;
  cfg.center_init = false;  // pure yaw seeds cannot bridge the offset
  const auto d = dual_normalization_align(pred, c.source, cfg, {-0.5, 0.5});
  EXPECT_EQ(d.result.selected_branch, NormalizationBranch::aabb_recentered);
  EXPECT_GT(d.fscore_aabb, d.fscore_minmax);
  EXPECT_EQ(d.fscore_aabb, 100.0);
}
