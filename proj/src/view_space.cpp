#include "scenebench/view_space.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace scenebench {

Mat3 CameraPose::basis() const {
  const Vec3 dir = look_at - position;
  if (!dir.allFinite() || !position.allFinite() || !up_hint.allFinite() || dir.norm() <= 1e-12) {
    throw Error(ErrorCode::InvalidCamera, "camera position coincides with its look-at point");
  }
  const Vec3 forward = dir.normalized();
  const Vec3 right_raw = forward.cross(up_hint);
  if (right_raw.norm() <= 1e-12 * std::max(1.0, up_hint.norm())) {
    throw Error(ErrorCode::InvalidCamera, "up hint is parallel to the viewing direction");
  }
  const Vec3 right = right_raw.normalized();
  const Vec3 up = right.cross(forward);
  Mat3 b;
  b.col(0) = right;
  b.col(1) = up;
  b.col(2) = -forward;
  return b;
}

SimilarityTransform world_to_camera(const CameraPose& camera) {
  const Mat3 b = camera.basis();
  SimilarityTransform t;
  t.rotation = b.transpose();
  t.translation = -(b.transpose() * camera.position);
  return t;
}

PointCloud to_view_centric(const PointCloud& cloud, const CameraPose& camera) {
  if (cloud.space == SpaceTag::view_centric) {
    throw Error(ErrorCode::SpaceMismatch, "cloud is already view-centric");
  }
  const Mat3 b = camera.basis();
  PointCloud out = cloud;
  for (auto& p : out.points) p = b.transpose() * (p - camera.position);
  for (auto& n : out.normals) n = b.transpose() * n;
  out.space = SpaceTag::view_centric;
  return out;
}

PointCloud to_canonical(const PointCloud& cloud, const CameraPose& camera) {
  if (cloud.space != SpaceTag::view_centric) {
    throw Error(ErrorCode::SpaceMismatch, "to_canonical expects a view-centric cloud, got " +
                                              std::string(space_tag_name(cloud.space)));
  }
  const Mat3 b = camera.basis();
  PointCloud out = cloud;
  for (auto& p : out.points) p = b * p + camera.position;
  for (auto& n : out.normals) n = b * n;
  out.space = SpaceTag::canonical;
  return out;
}

ScenePoses scene_poses(const LayoutScene& scene) {
  ScenePoses out;
  for (const auto& inst : scene.instances) out.poses.push_back(instance_pose(inst));
  return out;
}

ScenePoses to_view_centric(const LayoutScene& scene, const CameraPose& camera) {
  return to_view_centric(scene_poses(scene), camera);
}

ScenePoses to_view_centric(const ScenePoses& scene, const CameraPose& camera) {
  if (scene.space == SpaceTag::view_centric) {
    throw Error(ErrorCode::SpaceMismatch, "scene is already view-centric");
  }
  const SimilarityTransform view = world_to_camera(camera);
  ScenePoses out{{}, SpaceTag::view_centric};
  for (const auto& p : scene.poses) out.poses.push_back(view * p);
  return out;
}

ScenePoses to_canonical(const ScenePoses& scene, const CameraPose& camera) {
  if (scene.space != SpaceTag::view_centric) {
    throw Error(ErrorCode::SpaceMismatch, "to_canonical expects a view-centric scene");
  }
  const SimilarityTransform world = world_to_camera(camera).inverse();
  ScenePoses out{{}, SpaceTag::canonical};
  for (const auto& p : scene.poses) out.poses.push_back(world * p);
  return out;
}

namespace {

struct Projector {
  Mat3 rot;
  Vec3 position;
  double focal;
  double half;
  int res;
  double near;

  // pixel index and depth, or -1 when the point is not rendered
  std::pair<long, double> project(const Vec3& p) const {
    const Vec3 v = rot * (p - position);
    const double depth = -v.z();
    if (!(depth > near)) return {-1, 0.0};
    const double u = v.x() / depth * focal + half;
    const double w = half - v.y() / depth * focal;
    if (!(u >= 0.0 && u < res && w >= 0.0 && w < res)) return {-1, 0.0};
    return {static_cast<long>(std::floor(w)) * res + static_cast<long>(std::floor(u)), depth};
  }
};

Projector make_projector(const CameraPose& camera, const RasterConfig& raster) {
  if (raster.resolution < 16) throw Error(ErrorCode::DomainError, "raster resolution must be at least 16");
  if (!(raster.fov_y_deg > 0.0 && raster.fov_y_deg < 180.0)) {
    throw Error(ErrorCode::DomainError, "field of view must lie in (0, 180) degrees");
  }
  const double half = 0.5 * raster.resolution;
  const double focal = half / std::tan(0.5 * raster.fov_y_deg * std::numbers::pi / 180.0);
  return {camera.basis().transpose(), camera.position, focal, half, raster.resolution, raster.near};
}

}  // namespace

double visibility_fraction(const PointCloud& instance, std::span<const PointCloud> occluders,
                           const CameraPose& camera, const RasterConfig& raster) {
  const Projector proj = make_projector(camera, raster);
  if (instance.empty()) return 0.0;
  std::vector<double> depth(static_cast<std::size_t>(raster.resolution) * raster.resolution,
                            std::numeric_limits<double>::infinity());
  for (const auto& occ : occluders) {
    for (const auto& p : occ.points) {
      const auto [pix, d] = proj.project(p);
      if (pix >= 0) depth[pix] = std::min(depth[pix], d);
    }
  }
  std::size_t visible = 0;
  for (const auto& p : instance.points) {
    const auto [pix, d] = proj.project(p);
    if (pix >= 0 && d < depth[pix] + raster.depth_epsilon) ++visible;
  }
  return static_cast<double>(visible) / static_cast<double>(instance.size());
}

ViewDecision evaluate_view(std::span<const PointCloud> instances, const CameraPose& camera,
                           const RasterConfig& raster, double discard_threshold) {
  const Projector proj = make_projector(camera, raster);
  // nearest and second-nearest depth per pixel from distinct instances, so
  // each instance can be tested against everything except itself
  struct Slot {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t owner = std::numeric_limits<std::size_t>::max();
  };
  std::vector<Slot> buf(static_cast<std::size_t>(raster.resolution) * raster.resolution);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& p : instances[i].points) {
      const auto [pix, d] = proj.project(p);
      if (pix < 0) continue;
      Slot& s = buf[pix];
      if (s.owner == i) {
        s.d1 = std::min(s.d1, d);
      } else if (d < s.d1) {
        s.d2 = s.d1;
        s.d1 = d;
        s.owner = i;
      } else {
        s.d2 = std::min(s.d2, d);
      }
    }
  }
  ViewDecision out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::size_t visible = 0;
    for (const auto& p : instances[i].points) {
      const auto [pix, d] = proj.project(p);
      if (pix < 0) continue;
      const Slot& s = buf[pix];
      const double occ = s.owner == i ? s.d2 : s.d1;
      if (d < occ + raster.depth_epsilon) ++visible;
    }
    const double f = instances[i].empty() ? 0.0
                                          : static_cast<double>(visible) / static_cast<double>(instances[i].size());
    out.fractions.push_back(f);
    if (f <= discard_threshold) out.keep = false;
  }
  return out;
}

}  // namespace scenebench
