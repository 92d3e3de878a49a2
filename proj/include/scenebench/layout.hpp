#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scenebench/geometry.hpp"

namespace scenebench {

enum class SpatialRelation { right, left, front, back, on_top_of };

std::string_view relation_name(SpatialRelation r);
SpatialRelation parse_relation(std::string_view name);

struct InstanceSpec {
  std::string mesh_path;
  std::shared_ptr<const TriangleMesh> mesh;  // may be null for pure disc layouts
  double base_radius = 0.0;                  // unscaled footprint radius
  double scale = 1.0;
  bool is_table = false;
  // mesh point that lands on the instance center (x/z midpoint, lowest y)
  Vec3 anchor = Vec3::Zero();

  double effective_radius() const { return scale * base_radius; }
};

/// Builds a spec whose base radius and anchor come from the mesh bounds.
InstanceSpec make_instance_spec(std::string mesh_path, std::shared_ptr<const TriangleMesh> mesh,
                                double scale, bool is_table = false);

struct Rect2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  Vec2 size() const { return max - min; }
  /// Same center, each side multiplied by `factor`.
  Rect2 grown(double factor) const;
};

/// Ground coordinates are (x, z); y is up.
struct PlacedInstance {
  InstanceSpec spec;
  Vec2 center = Vec2::Zero();
  double yaw = 0.0;
  double effective_radius = 0.0;
  double base_height = 0.0;  // y of the instance's lowest point
  std::optional<std::size_t> stacked_on;
};

/// Pose that maps the instance's mesh into scene coordinates.
SimilarityTransform instance_pose(const PlacedInstance& inst);

struct RelationTag {
  std::size_t subject;
  std::size_t reference;
  SpatialRelation relation;

  bool operator==(const RelationTag&) const = default;
};

struct LayoutScene {
  std::vector<PlacedInstance> instances;  // placement order; ids are indices
  double gap = 0.0;
  Rect2 region;                           // final (possibly grown) sampling region
  std::vector<RelationTag> relations;
  std::uint64_t rng_seed = 0;
  int region_expansions = 0;
};

inline constexpr std::size_t kMinSceneObjects = 2;
inline constexpr std::size_t kMaxSceneObjects = 12;
inline constexpr double kRegionGrowth = 1.10;

/// scale * half the diagonal of the mesh's x/z extents.
double footprint_radius(const TriangleMesh& mesh, double scale);

/// mean(radii) * density_factor.
double compute_gap(std::span<const double> radii, double density_factor);

struct PlacementOptions {
  int retry_budget = 64;
  int max_expansions = 8;
  double growth = kRegionGrowth;
  std::size_t min_instances = kMinSceneObjects;
  std::size_t max_instances = kMaxSceneObjects;
  /// Uniform-grid rejection; the brute-force path exists for cross-checking.
  bool use_grid = true;
  /// When set, each non-table instance must also stand in this relation to the
  /// previously placed one.
  std::optional<SpatialRelation> constrained_relation;
};

/// Raised when placement exhausts its expansions; carries what was placed.
class PlacementError : public Error {
 public:
  PlacementError(const std::string& message, LayoutScene partial)
      : Error(ErrorCode::PlacementFailed, message), partial_(std::move(partial)) {}
  const LayoutScene& partial() const { return partial_; }

 private:
  LayoutScene partial_;
};

/// Variable-radius Poisson-disk placement: tables first, then descending
/// radius. A candidate is accepted only if it clears every placed disc by
/// r_i + r_j + gap.
LayoutScene poisson_place(std::span<const InstanceSpec> specs, const Rect2& region, double gap,
                          std::uint64_t rng_seed, const PlacementOptions& options = {});

struct TableTop {
  std::vector<Vec2> polygon;  // counter-clockwise loop in (x, z)
  Vec2 centroid = Vec2::Zero();
  double top_height = 0.0;
};

/// Cross-section of the mesh at max_y - epsilon; the largest loop is kept.
TableTop slice_table_top(const TriangleMesh& table, double epsilon);

/// Moves a table top from mesh coordinates into the scene using the table's pose.
TableTop place_table_top(const TableTop& local, const PlacedInstance& table);

double polygon_area(std::span<const Vec2> polygon);
double distance_to_boundary(std::span<const Vec2> polygon, const Vec2& p);
bool point_in_polygon(std::span<const Vec2> polygon, const Vec2& p);

struct StackOptions {
  double margin = 0.9;
  double min_radius = 1e-3;
};

/// Centers `object` on the top's centroid, shrinking its scale so the footprint
/// stays within margin * (centroid-to-edge distance).
PlacedInstance stack_on_table(const TableTop& top, const InstanceSpec& object, std::size_t table_id,
                              const StackOptions& options = {});

/// Dominant-axis relation of every pair (+x right, -x left, +z front, -z back);
/// stacked pairs are tagged on_top_of. Subject is the later instance unless it
/// is the support.
std::vector<RelationTag> tag_relations(const LayoutScene& scene);

struct AssetEntry {
  std::string path;
  std::shared_ptr<const TriangleMesh> mesh;
  bool is_table = false;
};

struct SynthConfig {
  std::size_t min_objects = kMinSceneObjects;
  std::size_t max_objects = kMaxSceneObjects;
  double min_scale = 0.5;
  double max_scale = 1.5;
  double min_density = 0.3;
  double max_density = 1.0;
  double stack_probability = 0.5;
  double slice_epsilon = 0.01;
  /// Initial region area as a multiple of the summed disc areas (radius r + gap/2).
  double region_area_factor = 2.0;
  PlacementOptions placement;
  StackOptions stack;
};

/// One random non-semantic scene: sample N assets, scales and a density
/// factor, place them, optionally stack one object on a table.
LayoutScene synthesize_scene(std::span<const AssetEntry> assets, const SynthConfig& config,
                             std::uint64_t rng_seed);

}  // namespace scenebench
