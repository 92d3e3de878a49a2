#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/layout.hpp"

namespace scenebench {

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestInstance {
  std::size_t id = 0;
  std::string mesh_path;  // relative to the manifest's directory
  double scale = 1.0;
  Vec3 center = Vec3::Zero();  // (x, base height, z) of the instance anchor
  double yaw = 0.0;
  std::optional<std::size_t> stacked_on;
  bool is_table = false;
  Aabb aabb;  // posed mesh bounds in scene coordinates
};

struct SceneManifest {
  int schema_version = kManifestSchemaVersion;
  std::uint64_t seed = 0;
  double gap = 0.0;
  Rect2 region;
  std::vector<ManifestInstance> instances;
  std::vector<RelationTag> relations;
  SpaceTag space = SpaceTag::raw;
};

bool operator==(const ManifestInstance& a, const ManifestInstance& b);
bool operator==(const SceneManifest& a, const SceneManifest& b);

/// Rounds to 9 significant digits, the precision manifests are written with.
double round_significant(double x);

/// Mesh paths are rewritten relative to `manifest_dir`; all floats are rounded
/// so a save/load cycle reproduces the manifest exactly.
SceneManifest manifest_from_scene(const LayoutScene& scene, const std::filesystem::path& manifest_dir);

std::string manifest_to_string(const SceneManifest& manifest);
void save_manifest(const std::filesystem::path& path, const SceneManifest& manifest);

/// Throws ManifestError (with line or field context) or VersionError. Mesh
/// existence is checked against `base_dir` when given.
SceneManifest parse_manifest(const std::string& text,
                             const std::optional<std::filesystem::path>& base_dir = std::nullopt);
SceneManifest load_manifest(const std::filesystem::path& path);

/// Loads every referenced mesh and rebuilds the placed instances.
std::vector<PlacedInstance> manifest_instances(const SceneManifest& manifest,
                                               const std::filesystem::path& base_dir);

}  // namespace scenebench
