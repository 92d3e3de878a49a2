#include "scenebench/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scenebench/io.hpp"

namespace scenebench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void manifest_error(const std::string& what) { throw Error(ErrorCode::ManifestError, what); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

const json& field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) manifest_error(ctx + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) manifest_error(ctx + "." + key + ": missing field");
  return *it;
}

double number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = field(obj, key, ctx);
  if (!v.is_number()) manifest_error(ctx + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) manifest_error(ctx + "." + key + ": not finite");
  return x;
}

std::size_t index(const json& v, const std::string& ctx) {
  if (!v.is_number_unsigned()) manifest_error(ctx + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& obj, const char* key, const std::string& ctx) {
  const json& v = field(obj, key, ctx);
  if (!v.is_array() || v.size() != N) manifest_error(ctx + "." + key + ": expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) manifest_error(ctx + "." + key + ": expected numbers");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) manifest_error(ctx + "." + key + ": not finite");
  }
  return out;
}

std::string string_field(const json& obj, const char* key, const std::string& ctx) {
  const json& v = field(obj, key, ctx);
  if (!v.is_string()) manifest_error(ctx + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool aabb_equal(const Aabb& a, const Aabb& b) { return a.min == b.min && a.max == b.max; }

Vec3 round_vec(const Vec3& v) { return {round_significant(v.x()), round_significant(v.y()), round_significant(v.z())}; }
Vec2 round_vec(const Vec2& v) { return {round_significant(v.x()), round_significant(v.y())}; }

}  // namespace

double round_significant(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

bool operator==(const ManifestInstance& a, const ManifestInstance& b) {
  return a.id == b.id && a.mesh_path == b.mesh_path && a.scale == b.scale && a.center == b.center &&
         a.yaw == b.yaw && a.stacked_on == b.stacked_on && a.is_table == b.is_table && aabb_equal(a.aabb, b.aabb);
}

bool operator==(const SceneManifest& a, const SceneManifest& b) {
  return a.schema_version == b.schema_version && a.seed == b.seed && a.gap == b.gap &&
         a.region.min == b.region.min && a.region.max == b.region.max && a.instances == b.instances &&
         a.relations == b.relations && a.space == b.space;
}

SceneManifest manifest_from_scene(const LayoutScene& scene, const fs::path& manifest_dir) {
  SceneManifest m;
  m.seed = scene.rng_seed;
  m.gap = round_significant(scene.gap);
  m.region = {round_vec(scene.region.min), round_vec(scene.region.max)};
  m.relations = scene.relations;
  const fs::path base = fs::absolute(manifest_dir);
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const auto& inst = scene.instances[i];
    ManifestInstance mi;
    mi.id = i;
    mi.mesh_path = fs::absolute(inst.spec.mesh_path).lexically_relative(base).generic_string();
    mi.scale = round_significant(inst.spec.scale);
    mi.center = round_vec(Vec3(inst.center.x(), inst.base_height, inst.center.y()));
    mi.yaw = round_significant(inst.yaw);
    mi.stacked_on = inst.stacked_on;
    mi.is_table = inst.spec.is_table;
    if (inst.spec.mesh) {
      const Aabb box = mesh_bounds(transform_mesh(*inst.spec.mesh, instance_pose(inst)));
      mi.aabb = {round_vec(box.min), round_vec(box.max)};
    }
    m.instances.push_back(std::move(mi));
  }
  return m;
}

std::string manifest_to_string(const SceneManifest& m) {
  json doc;
  doc["schema_version"] = m.schema_version;
  doc["seed"] = m.seed;
  doc["gap"] = round_significant(m.gap);
  doc["region"] = {{"min", vec_json(round_vec(m.region.min))}, {"max", vec_json(round_vec(m.region.max))}};
  doc["space_tag"] = std::string(space_tag_name(m.space));
  json instances = json::array();
  for (const auto& inst : m.instances) {
    json j;
    j["id"] = inst.id;
    j["mesh_path"] = inst.mesh_path;
    j["scale"] = round_significant(inst.scale);
    j["center"] = vec_json(round_vec(inst.center));
    j["yaw"] = round_significant(inst.yaw);
    j["stacked_on"] = inst.stacked_on ? json(*inst.stacked_on) : json(nullptr);
    j["is_table"] = inst.is_table;
    j["aabb"] = {{"min", vec_json(round_vec(inst.aabb.min))}, {"max", vec_json(round_vec(inst.aabb.max))}};
    instances.push_back(std::move(j));
  }
  doc["instances"] = std::move(instances);
  json relations = json::array();
  for (const auto& r : m.relations)
    relations.push_back({{"subject", r.subject}, {"reference", r.reference}, {"relation", relation_name(r.relation)}});
  doc["relations"] = std::move(relations);
  return doc.dump(2) + "\n";
}

void save_manifest(const fs::path& path, const SceneManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": cannot open for writing");
  out << manifest_to_string(manifest);
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

SceneManifest parse_manifest(const std::string& text, const std::optional<fs::path>& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    manifest_error("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                   e.what());
  }
  if (!doc.is_object()) manifest_error("top level must be an object");
  const json& version = field(doc, "schema_version", "manifest");
  if (!version.is_number_integer()) manifest_error("manifest.schema_version: expected an integer");
  SceneManifest m;
  m.schema_version = version.get<int>();
  if (m.schema_version != kManifestSchemaVersion)
    throw Error(ErrorCode::VersionError, "unsupported manifest schema_version " + std::to_string(m.schema_version));

  m.seed = index(field(doc, "seed", "manifest"), "manifest.seed");
  m.gap = number(doc, "gap", "manifest");
  const json& region = field(doc, "region", "manifest");
  m.region = {vec<2>(region, "min", "manifest.region"), vec<2>(region, "max", "manifest.region")};
  try {
    m.space = parse_space_tag(string_field(doc, "space_tag", "manifest"));
  } catch (const Error& e) {
    manifest_error(std::string("manifest.space_tag: ") + e.what());
  }

  const json& instances = field(doc, "instances", "manifest");
  if (!instances.is_array()) manifest_error("manifest.instances: expected an array");
  std::set<std::size_t> ids;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string ctx = "instances[" + std::to_string(i) + "]";
    const json& j = instances[i];
    ManifestInstance inst;
    inst.id = index(field(j, "id", ctx), ctx + ".id");
    if (!ids.insert(inst.id).second) manifest_error(ctx + ".id: duplicate instance id " + std::to_string(inst.id));
    inst.mesh_path = string_field(j, "mesh_path", ctx);
    inst.scale = number(j, "scale", ctx);
    if (!(inst.scale > 0.0)) manifest_error(ctx + ".scale: must be positive");
    inst.center = vec<3>(j, "center", ctx);
    inst.yaw = number(j, "yaw", ctx);
    const json& stacked = field(j, "stacked_on", ctx);
    if (!stacked.is_null()) inst.stacked_on = index(stacked, ctx + ".stacked_on");
    const json& table = field(j, "is_table", ctx);
    if (!table.is_boolean()) manifest_error(ctx + ".is_table: expected a boolean");
    inst.is_table = table.get<bool>();
    const json& box = field(j, "aabb", ctx);
    inst.aabb = {vec<3>(box, "min", ctx + ".aabb"), vec<3>(box, "max", ctx + ".aabb")};
    if (base_dir) {
      const fs::path mesh = *base_dir / inst.mesh_path;
      if (!fs::is_regular_file(mesh)) manifest_error(ctx + ".mesh_path: mesh not found: " + mesh.string());
    }
    m.instances.push_back(std::move(inst));
  }
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    const auto& s = m.instances[i].stacked_on;
    if (s && !ids.count(*s))
      manifest_error("instances[" + std::to_string(i) + "].stacked_on: unknown id " + std::to_string(*s));
  }

  const json& relations = field(doc, "relations", "manifest");
  if (!relations.is_array()) manifest_error("manifest.relations: expected an array");
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const std::string ctx = "relations[" + std::to_string(i) + "]";
    RelationTag tag{};
    tag.subject = index(field(relations[i], "subject", ctx), ctx + ".subject");
    tag.reference = index(field(relations[i], "reference", ctx), ctx + ".reference");
    if (!ids.count(tag.subject) || !ids.count(tag.reference)) manifest_error(ctx + ": unknown instance id");
    try {
      tag.relation = parse_relation(string_field(relations[i], "relation", ctx));
    } catch (const Error& e) {
      manifest_error(ctx + ".relation: " + e.what());
    }
    m.relations.push_back(tag);
  }
  return m;
}

SceneManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ManifestError, path.string() + ": cannot open manifest");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_manifest(buf.str(), path.parent_path());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionError) throw;
    throw Error(ErrorCode::ManifestError, path.string() + ": " + e.what());
  }
}

std::vector<PlacedInstance> manifest_instances(const SceneManifest& manifest, const fs::path& base_dir) {
  std::map<std::string, std::shared_ptr<const TriangleMesh>> cache;
  std::vector<PlacedInstance> out;
  for (const auto& mi : manifest.instances) {
    const fs::path path = base_dir / mi.mesh_path;
    auto& mesh = cache[path.string()];
    if (!mesh) {
      auto shape = read_shape(path);
      if (shape.faces.empty()) throw Error(ErrorCode::ManifestError, path.string() + ": mesh has no faces");
      mesh = std::make_shared<const TriangleMesh>(to_mesh(shape));
    }
    PlacedInstance inst;
    inst.spec = make_instance_spec(path.string(), mesh, mi.scale, mi.is_table);
    inst.center = Vec2(mi.center.x(), mi.center.z());
    inst.base_height = mi.center.y();
    inst.yaw = mi.yaw;
    inst.effective_radius = inst.spec.effective_radius();
    inst.stacked_on = mi.stacked_on;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace scenebench
