#include "scenebench/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace scenebench {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY IO assumes a little-endian host");

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::IoError, path.string() + ": " + what);
}

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

Scalar parse_scalar(const std::string& t, const fs::path& path) {
  if (t == "char" || t == "int8") return Scalar::i8;
  if (t == "uchar" || t == "uint8") return Scalar::u8;
  if (t == "short" || t == "int16") return Scalar::i16;
  if (t == "ushort" || t == "uint16") return Scalar::u16;
  if (t == "int" || t == "int32") return Scalar::i32;
  if (t == "uint" || t == "uint32") return Scalar::u32;
  if (t == "float" || t == "float32") return Scalar::f32;
  if (t == "double" || t == "float64") return Scalar::f64;
  fail(path, "unknown PLY scalar type '" + t + "'");
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8: case Scalar::u8: return 1;
    case Scalar::i16: case Scalar::u16: return 2;
    case Scalar::i32: case Scalar::u32: case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

class PlyReader {
 public:
  PlyReader(std::istream& in, bool binary, const fs::path& path) : in_(in), binary_(binary), path_(path) {}

  double read(Scalar s) {
    if (!binary_) {
      std::string tok;
      if (!(in_ >> tok)) fail(path_, "unexpected end of PLY body");
      try {
        return std::stod(tok);
      } catch (const std::exception&) {
        fail(path_, "bad PLY value '" + tok + "'");
      }
    }
    char buf[8];
    const std::size_t n = scalar_size(s);
    if (!in_.read(buf, static_cast<std::streamsize>(n))) fail(path_, "unexpected end of PLY body");
    switch (s) {
      case Scalar::i8: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
      case Scalar::u8: { std::uint8_t v; std::memcpy(&v, buf, 1); return v; }
      case Scalar::i16: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
      case Scalar::u16: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
      case Scalar::i32: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
      case Scalar::u32: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
      case Scalar::f32: { float v; std::memcpy(&v, buf, 4); return v; }
      case Scalar::f64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0.0;
  }

 private:
  std::istream& in_;
  bool binary_;
  const fs::path& path_;
};

void fan_triangulate(const std::vector<long long>& poly, std::size_t vertex_count, const fs::path& path,
                     std::vector<std::array<std::uint32_t, 3>>& faces) {
  for (auto i : poly)
    if (i < 0 || static_cast<std::size_t>(i) >= vertex_count) fail(path, "face index out of range");
  for (std::size_t k = 1; k + 1 < poly.size(); ++k)
    faces.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[k]),
                     static_cast<std::uint32_t>(poly[k + 1])});
}

}  // namespace

ShapeData read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) fail(path, "missing 'ply' magic");

  bool binary = false;
  std::vector<Element> elements;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else fail(path, "unsupported PLY format '" + fmt + "'");
    } else if (key == "element") {
      Element e;
      ls >> e.name >> e.count;
      if (!ls) fail(path, "bad element line");
      elements.push_back(e);
    } else if (key == "property") {
      if (elements.empty()) fail(path, "property before element");
      Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(ct, path);
        p.type = parse_scalar(it, path);
      } else {
        p.type = parse_scalar(t, path);
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (key == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) fail(path, "missing end_header");

  ShapeData out;
  PlyReader reader(in, binary, path);
  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ifaces = -1;
    for (int k = 0; k < static_cast<int>(e.props.size()); ++k) {
      const auto& n = e.props[k].name;
      if (n == "x") ix = k;
      else if (n == "y") iy = k;
      else if (n == "z") iz = k;
      else if (n == "nx") inx = k;
      else if (n == "ny") iny = k;
      else if (n == "nz") inz = k;
      else if (e.props[k].is_list && (n == "vertex_indices" || n == "vertex_index")) ifaces = k;
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) fail(path, "vertex element lacks x/y/z");
    const bool with_normals = is_vertex && inx >= 0 && iny >= 0 && inz >= 0;

    std::vector<double> scalars(e.props.size());
    std::vector<long long> list;
    for (std::size_t r = 0; r < e.count; ++r) {
      for (int k = 0; k < static_cast<int>(e.props.size()); ++k) {
        const auto& p = e.props[k];
        if (p.is_list) {
          const double count = reader.read(p.count_type);
          if (count < 0) fail(path, "negative list length");
          list.clear();
          for (std::size_t c = 0; c < static_cast<std::size_t>(count); ++c)
            list.push_back(static_cast<long long>(reader.read(p.type)));
          if (is_face && k == ifaces) fan_triangulate(list, out.vertices.size(), path, out.faces);
        } else {
          scalars[k] = reader.read(p.type);
        }
      }
      if (is_vertex) {
        out.vertices.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
        if (with_normals) out.normals.emplace_back(scalars[inx], scalars[iny], scalars[inz]);
      }
    }
  }
  return out;
}

void write_ply(const fs::path& path, const ShapeData& shape, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  const bool normals = !shape.normals.empty();
  if (normals && shape.normals.size() != shape.vertices.size()) fail(path, "normal count differs from vertex count");
  out << "ply\nformat " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << shape.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (!shape.faces.empty())
    out << "element face " << shape.faces.size() << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";

  if (format == PlyFormat::ascii) {
    out.precision(17);
    for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
      const auto& v = shape.vertices[i];
      out << v.x() << ' ' << v.y() << ' ' << v.z();
      if (normals) out << ' ' << shape.normals[i].x() << ' ' << shape.normals[i].y() << ' ' << shape.normals[i].z();
      out << '\n';
    }
    for (const auto& f : shape.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  } else {
    for (std::size_t i = 0; i < shape.vertices.size(); ++i) {
      out.write(reinterpret_cast<const char*>(shape.vertices[i].data()), 3 * sizeof(double));
      if (normals) out.write(reinterpret_cast<const char*>(shape.normals[i].data()), 3 * sizeof(double));
    }
    for (const auto& f : shape.faces) {
      const std::uint8_t n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      for (auto idx : f) {
        const auto v = static_cast<std::int32_t>(idx);
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  if (!out) fail(path, "write failed");
}

ShapeData read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  ShapeData out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<long long> poly;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) fail(path, "line " + std::to_string(lineno) + ": bad vertex");
      out.vertices.emplace_back(x, y, z);
    } else if (key == "f") {
      poly.clear();
      std::string tok;
      while (ls >> tok) {
        long long idx = 0;
        try {
          idx = std::stoll(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          fail(path, "line " + std::to_string(lineno) + ": bad face index '" + tok + "'");
        }
        // 1-based; negative counts back from the latest vertex
        poly.push_back(idx > 0 ? idx - 1 : static_cast<long long>(out.vertices.size()) + idx);
      }
      if (poly.size() < 3) fail(path, "line " + std::to_string(lineno) + ": face with fewer than 3 vertices");
      fan_triangulate(poly, out.vertices.size(), path, out.faces);
    }
  }
  return out;
}

void write_obj(const fs::path& path, const ShapeData& shape) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out.precision(17);
  for (const auto& v : shape.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : shape.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) fail(path, "write failed");
}

bool is_shape_file(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  return ext == ".ply" || ext == ".obj";
}

ShapeData read_shape(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".ply") return read_ply(path);
  if (ext == ".obj") return read_obj(path);
  fail(path, "unsupported extension '" + ext + "'");
}

void write_shape(const fs::path& path, const ShapeData& shape) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".ply") return write_ply(path, shape);
  if (ext == ".obj") return write_obj(path, shape);
  fail(path, "unsupported extension '" + ext + "'");
}

TriangleMesh to_mesh(const ShapeData& shape) { return {shape.vertices, shape.faces}; }

ShapeData from_mesh(const TriangleMesh& mesh) { return {mesh.vertices, {}, mesh.faces}; }

ShapeData from_cloud(const PointCloud& cloud) { return {cloud.points, cloud.normals, {}}; }

PointCloud load_instance_cloud(const fs::path& path, std::size_t samples, std::uint64_t seed) {
  const ShapeData shape = read_shape(path);
  if (shape.vertices.empty()) fail(path, "no vertices");
  if (shape.faces.empty()) {
    PointCloud c(shape.vertices);
    c.validate();
    return c;
  }
  const TriangleMesh mesh = to_mesh(shape);
  mesh.validate();
  PointCloud c = sample_surface(mesh, samples, seed);
  c.normals.clear();
  return c;
}

std::vector<AssetEntry> load_assets(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_shape_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<AssetEntry> out;
  for (const auto& f : files) {
    auto mesh = std::make_shared<TriangleMesh>(to_mesh(read_shape(f)));
    if (mesh->faces.empty()) fail(f, "asset has no faces");
    mesh->validate();
    out.push_back({f.string(), std::move(mesh), lower(f.filename().string()).find("table") != std::string::npos});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, dir.string() + ": no .ply/.obj assets");
  return out;
}

}  // namespace scenebench
