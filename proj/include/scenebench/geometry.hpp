#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "scenebench/errors.hpp"

namespace scenebench {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Coordinate frame a cloud lives in. Operations that combine two clouds
/// refuse to mix frames.
enum class SpaceTag {
  raw,
  shared_normalized,
  minmax_normalized,
  aabb_normalized,
  view_centric,
  canonical,
};

std::string_view space_tag_name(SpaceTag tag);
SpaceTag parse_space_tag(std::string_view name);

// Written out so every nearest-neighbour path (tree, brute force, metrics)
// agrees bit-for-bit on the same pair.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point
  SpaceTag space = SpaceTag::raw;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts, SpaceTag tag = SpaceTag::raw)
      : points(std::move(pts)), space(tag) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  /// Throws InvalidGeometry on non-finite coordinates or malformed normals.
  void validate() const;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;

  bool empty() const { return vertices.empty() || faces.empty(); }
  void validate() const;
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  static Aabb from_points(std::span<const Vec3> points);

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double volume() const;
  double max_side() const { return extent().maxCoeff(); }
  Aabb merged(const Aabb& other) const;
};

/// x -> scale * rotation * x + translation.
struct SimilarityTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  static SimilarityTransform identity() { return {}; }
  static SimilarityTransform from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Vec3 apply_direction(const Vec3& n) const { return rotation * n; }

  /// (this * other)(x) == this(other(x)).
  SimilarityTransform operator*(const SimilarityTransform& other) const;
  SimilarityTransform inverse() const;
  Mat4 matrix() const;
  bool is_finite() const;
};

PointCloud transform_cloud(const PointCloud& cloud, const SimilarityTransform& t);

/// Rotation by `radians` about the given coordinate axis (0=x, 1=y, 2=z).
Mat3 axis_rotation(int axis, double radians);

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Exact nearest-neighbour index over a fixed reference set. Ties on distance
/// resolve to the lowest reference index, matching a brute-force scan.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> reference);

  Neighbor nearest(const Vec3& query) const;
  /// The k nearest, ordered by (distance, index).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;     // range in order_
    std::int32_t left = -1, right = -1;
    int axis = -1;                // -1 for leaves
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search_nearest(std::int32_t node, const Vec3& q, double& best_d2,
                      std::size_t& best_idx) const;
  void search_knn(std::int32_t node, const Vec3& q, std::size_t k,
                  std::vector<std::pair<double, std::size_t>>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// geometry operations --------------------------------------------------------

/// One centroid per occupied voxel of side `voxel_size`, cells anchored at
/// `origin` (defaults to the cloud's AABB minimum). Output is ordered by cell
/// index. Normals, when present, are averaged and renormalized.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size,
                            std::optional<Vec3> origin = std::nullopt);

using VoxelKey = std::array<std::int64_t, 3>;

/// Integer cell of `p` on a grid anchored at `origin`.
VoxelKey voxel_index(const Vec3& p, const Vec3& origin, double voxel_size);

/// PCA normals from each point plus its k nearest neighbours, oriented to face
/// the origin of the cloud's frame.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = 16);

struct SharedNormalization {
  PointCloud source;
  PointCloud target;
  Vec3 center;
  double sigma;

  /// Maps raw coordinates into the normalized frame.
  SimilarityTransform forward() const;
};

/// x' = (x - c) / sigma with c the joint AABB midpoint and sigma its longest side.
SharedNormalization shared_normalize(const PointCloud& source, const PointCloud& target);

/// Nearest proper rotation to `m` in the Frobenius sense.
Mat3 project_to_so3(const Mat3& m);

std::vector<Neighbor> nearest_neighbors(const PointCloud& query, const PointCloud& reference);

// mesh helpers ---------------------------------------------------------------

TriangleMesh make_box(const Vec3& min, const Vec3& max);
/// Closed cylinder along +y standing on `base_center`.
TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height,
                           int segments = 64);
/// Table: a slab top on four legs, occupying [0,w]x[0,h]x[0,d].
TriangleMesh make_table(double width, double height, double depth,
                        double top_thickness = 0.05, double leg = 0.05);
TriangleMesh merge_meshes(std::span<const TriangleMesh> parts);
TriangleMesh transform_mesh(const TriangleMesh& mesh, const SimilarityTransform& t);
Aabb mesh_bounds(const TriangleMesh& mesh);
double mesh_area(const TriangleMesh& mesh);

/// Area-weighted uniform surface samples with face normals.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace scenebench
