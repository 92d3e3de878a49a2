#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/layout.hpp"

namespace scenebench {

namespace fs = std::filesystem;

/// Vertices, optional per-vertex normals and triangulated faces of a PLY or
/// OBJ file. A file without faces is a point cloud.
struct ShapeData {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<std::array<std::uint32_t, 3>> faces;
};

enum class PlyFormat { ascii, binary_little_endian };

/// Reads ascii and binary_little_endian PLY. Vertex coordinates may be any
/// scalar type; faces come from a `vertex_indices` (or `vertex_index`) list
/// and polygons are fan-triangulated. Unknown elements are skipped.
ShapeData read_ply(const fs::path& path);
void write_ply(const fs::path& path, const ShapeData& shape, PlyFormat format = PlyFormat::binary_little_endian);

/// `v` and `f` records only; `f` accepts v/vt/vn tokens and negative indices.
ShapeData read_obj(const fs::path& path);
void write_obj(const fs::path& path, const ShapeData& shape);

/// Dispatch on the extension (.ply or .obj, case-insensitive).
ShapeData read_shape(const fs::path& path);
void write_shape(const fs::path& path, const ShapeData& shape);

TriangleMesh to_mesh(const ShapeData& shape);
ShapeData from_mesh(const TriangleMesh& mesh);
ShapeData from_cloud(const PointCloud& cloud);

bool is_shape_file(const fs::path& path);

/// Mesh files are surface-sampled to `samples` points; point files load as is.
PointCloud load_instance_cloud(const fs::path& path, std::size_t samples, std::uint64_t seed);

/// Every .ply/.obj under `dir` (non-recursive, sorted by name). An asset whose
/// file name contains "table" is treated as a table.
std::vector<AssetEntry> load_assets(const fs::path& dir);

}  // namespace scenebench
