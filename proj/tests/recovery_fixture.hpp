#pragma once

// Known-transform recovery cases built from synthesized scenes.

#include <cmath>
#include <numbers>

#include "scenebench/layout.hpp"
#include "scenebench/random.hpp"
#include "scenebench/registration.hpp"
#include "test_assets.hpp"

namespace scenebench::fixtures {

struct RecoveryCase {
  PointCloud source;
  PointCloud target;
  SimilarityTransform truth;  // source -> target
  std::size_t objects = 0;
};

struct RecoveryError {
  double rotation_deg = 0.0;
  double translation = 0.0;  // normalized units
  double scale = 0.0;        // relative
};

inline TriangleMesh posed_scene_mesh(const LayoutScene& scene) {
  std::vector<TriangleMesh> parts;
  for (const auto& inst : scene.instances) parts.push_back(transform_mesh(*inst.spec.mesh, instance_pose(inst)));
  return merge_meshes(parts);
}

/// The scene is rescaled to unit longest side around the origin, then the
/// target is an independent surface sample moved by a random yaw from the
/// candidate set +-10 deg, a scale in [0.9, 1.1] and a translation of norm at
/// most 0.3.
inline RecoveryCase make_recovery_case(std::uint64_t seed, std::size_t points = 4000) {
  static const auto assets = procedural_assets();
  const LayoutScene scene = synthesize_scene(assets, SynthConfig{}, seed);
  TriangleMesh mesh = posed_scene_mesh(scene);
  const Aabb box = mesh_bounds(mesh);
  SimilarityTransform unit;
  unit.scale = 1.0 / box.max_side();
  unit.translation = -unit.scale * box.center();
  mesh = transform_mesh(mesh, unit);

  Rng rng(stable_hash("recovery", seed));
  RecoveryCase c;
  c.objects = scene.instances.size();
  c.source = sample_surface(mesh, points, rng.next());
  c.source.normals.clear();
  const double yaw = 45.0 * static_cast<double>(rng.uniform_int(0, 7)) + rng.uniform(-10.0, 10.0);
  c.truth.rotation = axis_rotation(1, yaw * std::numbers::pi / 180.0);
  c.truth.scale = rng.uniform(0.9, 1.1);
  Vec3 dir(rng.normal(), rng.normal(), rng.normal());
  c.truth.translation = dir.normalized() * rng.uniform(0.0, 0.3);
  PointCloud resampled = sample_surface(mesh, points, rng.next());
  resampled.normals.clear();
  c.target = transform_cloud(resampled, c.truth);
  return c;
}

inline RecoveryError recovery_error(const IcpResult& r, const SimilarityTransform& truth) {
  // compare in the normalized frame the estimate lives in
  const SimilarityTransform n = r.normalization.forward();
  const SimilarityTransform expect = n * truth * n.inverse();
  RecoveryError e;
  const double c = std::clamp(((r.transform.rotation * expect.rotation.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  e.rotation_deg = std::acos(c) * 180.0 / std::numbers::pi;
  e.translation = (r.transform.translation - expect.translation).norm();
  e.scale = std::abs(r.transform.scale / expect.scale - 1.0);
  return e;
}

}  // namespace scenebench::fixtures
