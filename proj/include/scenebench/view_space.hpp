#pragma once

#include <span>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/layout.hpp"

namespace scenebench {

/// Right-handed camera looking down its local -z axis with +y up.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = -Vec3::UnitZ();
  Vec3 up_hint = Vec3::UnitY();

  /// Columns are the camera's right, up and backward axes in world
  /// coordinates. Throws InvalidCamera when the basis is undefined.
  Mat3 basis() const;
};

/// Maps canonical coordinates into the camera frame.
SimilarityTransform world_to_camera(const CameraPose& camera);

PointCloud to_view_centric(const PointCloud& cloud, const CameraPose& camera);
PointCloud to_canonical(const PointCloud& cloud, const CameraPose& camera);

/// Per-instance poses of a scene in one frame.
struct ScenePoses {
  std::vector<SimilarityTransform> poses;
  SpaceTag space = SpaceTag::canonical;
};

ScenePoses scene_poses(const LayoutScene& scene);
ScenePoses to_view_centric(const LayoutScene& scene, const CameraPose& camera);
ScenePoses to_view_centric(const ScenePoses& scene, const CameraPose& camera);
ScenePoses to_canonical(const ScenePoses& scene, const CameraPose& camera);

struct RasterConfig {
  int resolution = 256;  // square raster, pixels per side
  double fov_y_deg = 60.0;
  double near = 1e-4;
  double depth_epsilon = 1e-9;
};

/// Fraction of `instance` points that are in frame, in front of the camera and
/// not behind any occluder point splatted into a 1-pixel depth buffer. The
/// instance does not occlude itself, so `occluders` must not include it.
double visibility_fraction(const PointCloud& instance, std::span<const PointCloud> occluders,
                           const CameraPose& camera, const RasterConfig& raster = {});

struct ViewDecision {
  bool keep = true;
  std::vector<double> fractions;  // one per instance
};

/// A view is discarded when any instance's visible fraction is at or below
/// `discard_threshold` (0 means only fully hidden instances trigger it).
ViewDecision evaluate_view(std::span<const PointCloud> instances, const CameraPose& camera,
                           const RasterConfig& raster = {}, double discard_threshold = 0.0);

}  // namespace scenebench
