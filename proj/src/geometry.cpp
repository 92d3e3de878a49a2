#include "scenebench/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "scenebench/random.hpp"

namespace scenebench {

std::string_view space_tag_name(SpaceTag tag) {
  switch (tag) {
    case SpaceTag::raw: return "raw";
    case SpaceTag::shared_normalized: return "shared_normalized";
    case SpaceTag::minmax_normalized: return "minmax_normalized";
    case SpaceTag::aabb_normalized: return "aabb_normalized";
    case SpaceTag::view_centric: return "view_centric";
    case SpaceTag::canonical: return "canonical";
  }
  return "raw";
}

SpaceTag parse_space_tag(std::string_view name) {
  for (auto tag : {SpaceTag::raw, SpaceTag::shared_normalized, SpaceTag::minmax_normalized,
                   SpaceTag::aabb_normalized, SpaceTag::view_centric, SpaceTag::canonical}) {
    if (space_tag_name(tag) == name) return tag;
  }
  throw Error(ErrorCode::InvalidGeometry, "unknown space tag '" + std::string(name) + "'");
}

void PointCloud::validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidGeometry, "non-finite point coordinate");
  }
  if (normals.empty()) return;
  if (normals.size() != points.size()) {
    throw Error(ErrorCode::InvalidGeometry, "normal count does not match point count");
  }
  for (const auto& n : normals) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::InvalidGeometry, "normal is not unit length");
    }
  }
}

void TriangleMesh::validate() const {
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidGeometry, "non-finite mesh vertex");
  }
  for (const auto& f : faces) {
    for (auto i : f) {
      if (i >= vertices.size()) throw Error(ErrorCode::InvalidGeometry, "face index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw Error(ErrorCode::InvalidGeometry, "degenerate face with repeated index");
    }
  }
}

Aabb Aabb::from_points(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "bounding box of an empty point set");
  Aabb box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

double Aabb::volume() const {
  const Vec3 e = extent();
  return e.x() * e.y() * e.z();
}

Aabb Aabb::merged(const Aabb& other) const {
  return {min.cwiseMin(other.min), max.cwiseMax(other.max)};
}

SimilarityTransform SimilarityTransform::from_matrix(const Mat4& m) {
  const Mat3 linear = m.topLeftCorner<3, 3>();
  SimilarityTransform t;
  t.scale = std::cbrt(std::abs(linear.determinant()));
  if (!(t.scale > 0.0)) t.scale = 1.0;
  t.rotation = linear / t.scale;
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

SimilarityTransform SimilarityTransform::operator*(const SimilarityTransform& other) const {
  SimilarityTransform out;
  out.rotation = rotation * other.rotation;
  out.scale = scale * other.scale;
  out.translation = scale * (rotation * other.translation) + translation;
  return out;
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform out;
  out.rotation = rotation.transpose();
  out.scale = 1.0 / scale;
  out.translation = -(out.rotation * translation) / scale;
  return out;
}

Mat4 SimilarityTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = scale * rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool SimilarityTransform::is_finite() const {
  return rotation.allFinite() && translation.allFinite() && std::isfinite(scale);
}

PointCloud transform_cloud(const PointCloud& cloud, const SimilarityTransform& t) {
  PointCloud out;
  out.space = cloud.space;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.apply_direction(n));
  return out;
}

Mat3 axis_rotation(int axis, double radians) {
  Vec3 a = Vec3::Zero();
  a[axis] = 1.0;
  return Eigen::AngleAxisd(radians, a).toRotationMatrix();
}

VoxelKey voxel_index(const Vec3& p, const Vec3& origin, double voxel_size) {
  VoxelKey key;
  for (int i = 0; i < 3; ++i) {
    key[i] = static_cast<std::int64_t>(std::floor((p[i] - origin[i]) / voxel_size));
  }
  return key;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size, std::optional<Vec3> origin) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "voxel_downsample on an empty cloud");
  if (!(voxel_size > 0.0)) throw Error(ErrorCode::InvalidGeometry, "voxel size must be positive");
  cloud.validate();
  const Vec3 o = origin.value_or(Aabb::from_points(cloud.points).min);

  struct Cell {
    Vec3 sum = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    std::size_t count = 0;
  };
  std::map<VoxelKey, Cell> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Cell& c = cells[voxel_index(cloud.points[i], o, voxel_size)];
    c.sum += cloud.points[i];
    if (cloud.has_normals()) c.normal += cloud.normals[i];
    ++c.count;
  }

  PointCloud out;
  out.space = cloud.space;
  out.points.reserve(cells.size());
  bool keep_normals = cloud.has_normals();
  for (const auto& [key, c] : cells) {
    out.points.push_back(c.sum / static_cast<double>(c.count));
    if (keep_normals) {
      const double len = c.normal.norm();
      if (len > 1e-12) {
        out.normals.push_back(c.normal / len);
      } else {
        keep_normals = false;  // opposing normals cancelled; drop them all
      }
    }
  }
  if (!keep_normals) out.normals.clear();
  return out;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k) {
  if (k == 0 || cloud.size() < k + 1) {
    throw Error(ErrorCode::InsufficientPoints,
                "normal estimation needs at least k+1 = " + std::to_string(k + 1) + " points");
  }
  const KdTree tree(cloud.points);
  PointCloud out = cloud;
  out.normals.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = tree.knn(cloud.points[i], k + 1);
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nbrs) mean += cloud.points[n.index];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nbrs) {
      const Vec3 d = cloud.points[n.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 normal = eig.eigenvectors().col(0).normalized();
    if (normal.dot(cloud.points[i]) > 0.0) normal = -normal;
    out.normals[i] = normal;
  }
  return out;
}

SimilarityTransform SharedNormalization::forward() const {
  SimilarityTransform t;
  t.scale = 1.0 / sigma;
  t.translation = -center / sigma;
  return t;
}

SharedNormalization shared_normalize(const PointCloud& source, const PointCloud& target) {
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::EmptyInput, "shared_normalize needs two non-empty clouds");
  }
  const Aabb box = Aabb::from_points(source.points).merged(Aabb::from_points(target.points));
  const Vec3 c = box.center();
  const double sigma = box.max_side();
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::DegenerateExtent, "joint bounding box has zero extent");
  }
  auto apply = [&](const PointCloud& in) {
    PointCloud out = in;
    for (auto& p : out.points) p = (p - c) / sigma;
    out.space = SpaceTag::shared_normalized;
    return out;
  };
  return {apply(source), apply(target), c, sigma};
}

Mat3 project_to_so3(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidGeometry, "non-finite matrix in project_to_so3");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

std::vector<Neighbor> nearest_neighbors(const PointCloud& query, const PointCloud& reference) {
  if (reference.empty()) throw Error(ErrorCode::EmptyInput, "nearest_neighbors: empty reference");
  const KdTree tree(reference.points);
  std::vector<Neighbor> out;
  out.reserve(query.size());
  for (const auto& q : query.points) out.push_back(tree.nearest(q));
  return out;
}

// meshes ----------------------------------------------------------------------

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  // outward-facing quads split into triangles
  const std::array<std::array<std::uint32_t, 4>, 6> quads = {{
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
  }};
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height, int segments) {
  TriangleMesh m;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    const Vec3 off(radius * std::cos(a), 0.0, -radius * std::sin(a));
    m.vertices.push_back(base_center + off);
    m.vertices.push_back(base_center + off + Vec3(0, height, 0));
  }
  const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
  m.vertices.push_back(base_center);
  m.vertices.push_back(base_center + Vec3(0, height, 0));
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.faces.push_back({b0, b1, t1});
    m.faces.push_back({b0, t1, t0});
    m.faces.push_back({bottom, b1, b0});
    m.faces.push_back({top, t0, t1});
  }
  return m;
}

TriangleMesh make_table(double width, double height, double depth, double top_thickness,
                        double leg) {
  std::vector<TriangleMesh> parts;
  parts.push_back(make_box(Vec3(0, height - top_thickness, 0), Vec3(width, height, depth)));
  const double legh = height - top_thickness;
  for (const Vec2& c : {Vec2(0, 0), Vec2(width - leg, 0), Vec2(0, depth - leg),
                        Vec2(width - leg, depth - leg)}) {
    parts.push_back(make_box(Vec3(c.x(), 0, c.y()), Vec3(c.x() + leg, legh, c.y() + leg)));
  }
  return merge_meshes(parts);
}

TriangleMesh merge_meshes(std::span<const TriangleMesh> parts) {
  TriangleMesh out;
  for (const auto& part : parts) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
    for (const auto& f : part.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const SimilarityTransform& t) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

Aabb mesh_bounds(const TriangleMesh& mesh) { return Aabb::from_points(mesh.vertices); }

double mesh_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    area += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
  }
  return area;
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyInput, "cannot sample an empty mesh");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    total += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::DegenerateExtent, "mesh has zero surface area");

  Rng rng(seed);
  PointCloud out;
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back((b - a).cross(c - a).normalized());
  }
  return out;
}

}  // namespace scenebench
