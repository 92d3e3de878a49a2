#include "scenebench/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "scenebench/random.hpp"

namespace scenebench {

std::string_view relation_name(SpatialRelation r) {
  switch (r) {
    case SpatialRelation::right: return "right";
    case SpatialRelation::left: return "left";
    case SpatialRelation::front: return "front";
    case SpatialRelation::back: return "back";
    case SpatialRelation::on_top_of: return "on_top_of";
  }
  return "right";
}

SpatialRelation parse_relation(std::string_view name) {
  for (auto r : {SpatialRelation::right, SpatialRelation::left, SpatialRelation::front,
                 SpatialRelation::back, SpatialRelation::on_top_of}) {
    if (relation_name(r) == name) return r;
  }
  throw Error(ErrorCode::ManifestError, "unknown spatial relation '" + std::string(name) + "'");
}

InstanceSpec make_instance_spec(std::string mesh_path, std::shared_ptr<const TriangleMesh> mesh,
                                double scale, bool is_table) {
  if (!mesh || mesh->empty()) throw Error(ErrorCode::EmptyInput, "instance mesh is empty");
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidGeometry, "instance scale must be positive");
  InstanceSpec spec;
  spec.base_radius = footprint_radius(*mesh, 1.0);
  const Aabb box = mesh_bounds(*mesh);
  spec.anchor = Vec3(0.5 * (box.min.x() + box.max.x()), box.min.y(), 0.5 * (box.min.z() + box.max.z()));
  spec.mesh_path = std::move(mesh_path);
  spec.mesh = std::move(mesh);
  spec.scale = scale;
  spec.is_table = is_table;
  return spec;
}

Rect2 Rect2::grown(double factor) const {
  const Vec2 c = 0.5 * (min + max);
  const Vec2 half = 0.5 * factor * size();
  return {c - half, c + half};
}

SimilarityTransform instance_pose(const PlacedInstance& inst) {
  SimilarityTransform t;
  t.rotation = axis_rotation(1, inst.yaw);
  t.scale = inst.spec.scale;
  const Vec3 target(inst.center.x(), inst.base_height, inst.center.y());
  t.translation = target - t.scale * (t.rotation * inst.spec.anchor);
  return t;
}

double footprint_radius(const TriangleMesh& mesh, double scale) {
  if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyInput, "footprint of an empty mesh");
  const Vec3 e = mesh_bounds(mesh).extent();
  const double r = 0.5 * std::hypot(e.x(), e.z());
  if (!(r > 0.0)) throw Error(ErrorCode::DegenerateExtent, "mesh has zero x/z extent");
  return scale * r;
}

double compute_gap(std::span<const double> radii, double density_factor) {
  if (radii.empty()) throw Error(ErrorCode::EmptyInput, "compute_gap needs at least one radius");
  if (!(density_factor > 0.0)) throw Error(ErrorCode::DomainError, "density factor must be positive");
  const double mean = std::accumulate(radii.begin(), radii.end(), 0.0) / static_cast<double>(radii.size());
  return mean * density_factor;
}

namespace {

SpatialRelation dominant_relation(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  if (std::abs(d.x()) >= std::abs(d.y())) return d.x() >= 0 ? SpatialRelation::right : SpatialRelation::left;
  return d.y() >= 0 ? SpatialRelation::front : SpatialRelation::back;
}

struct CellHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
    return std::hash<std::int64_t>()(k.first * 73856093LL ^ k.second * 19349663LL);
  }
};

// Disc occupancy with either a uniform-grid or an all-pairs clearance test.
class DiscSet {
 public:
  DiscSet(double cell, double max_radius, double gap, bool use_grid)
      : cell_(cell), max_radius_(max_radius), gap_(gap), use_grid_(use_grid) {}

  bool clear(const Vec2& c, double r) const {
    if (!use_grid_) {
      for (std::size_t j = 0; j < centers_.size(); ++j) {
        if (!separated(c, r, j)) return false;
      }
      return true;
    }
    const double reach = r + max_radius_ + gap_;
    const auto lo = key(c - Vec2::Constant(reach));
    const auto hi = key(c + Vec2::Constant(reach));
    const double window = static_cast<double>(hi.first - lo.first + 1) *
                          static_cast<double>(hi.second - lo.second + 1);
    if (window > static_cast<double>(cells_.size())) {
      for (const auto& [k, members] : cells_) {
        if (k.first < lo.first || k.first > hi.first || k.second < lo.second || k.second > hi.second) continue;
        for (auto j : members) {
          if (!separated(c, r, j)) return false;
        }
      }
      return true;
    }
    for (auto x = lo.first; x <= hi.first; ++x) {
      for (auto z = lo.second; z <= hi.second; ++z) {
        const auto it = cells_.find({x, z});
        if (it == cells_.end()) continue;
        for (auto j : it->second) {
          if (!separated(c, r, j)) return false;
        }
      }
    }
    return true;
  }

  void add(const Vec2& c, double r) {
    cells_[key(c)].push_back(centers_.size());
    centers_.push_back(c);
    radii_.push_back(r);
  }

 private:
  std::pair<std::int64_t, std::int64_t> key(const Vec2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_))};
  }

  bool separated(const Vec2& c, double r, std::size_t j) const {
    return (c - centers_[j]).norm() >= r + radii_[j] + gap_;
  }

  double cell_, max_radius_, gap_;
  bool use_grid_;
  std::vector<Vec2> centers_;
  std::vector<double> radii_;
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, CellHash> cells_;
};

}  // namespace

LayoutScene poisson_place(std::span<const InstanceSpec> specs, const Rect2& region, double gap,
                          std::uint64_t rng_seed, const PlacementOptions& options) {
  if (specs.size() < options.min_instances || specs.size() > options.max_instances) {
    throw Error(ErrorCode::InvalidSceneSize,
                "scene must hold between " + std::to_string(options.min_instances) + " and " +
                    std::to_string(options.max_instances) + " instances, got " +
                    std::to_string(specs.size()));
  }
  if (!(gap >= 0.0)) throw Error(ErrorCode::DomainError, "gap must be non-negative");
  for (const auto& s : specs) {
    if (!(s.base_radius > 0.0) || !(s.scale > 0.0)) {
      throw Error(ErrorCode::InvalidGeometry, "instance radius and scale must be positive");
    }
  }

  std::vector<std::size_t> order(specs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (specs[a].is_table != specs[b].is_table) return specs[a].is_table;
    return specs[a].effective_radius() > specs[b].effective_radius();
  });

  double min_r = std::numeric_limits<double>::infinity(), max_r = 0.0;
  for (const auto& s : specs) {
    min_r = std::min(min_r, s.effective_radius());
    max_r = std::max(max_r, s.effective_radius());
  }
  const double cell = (min_r + gap) / std::numbers::sqrt2;
  DiscSet discs(cell, max_r, gap, options.use_grid);

  Rng rng(rng_seed);
  LayoutScene scene;
  scene.gap = gap;
  scene.region = region;
  scene.rng_seed = rng_seed;

  std::optional<Vec2> previous;  // last non-table center, for constrained mode
  for (auto idx : order) {
    const InstanceSpec& spec = specs[idx];
    const double r = spec.effective_radius();
    std::optional<Vec2> accepted;
    while (!accepted) {
      for (int attempt = 0; attempt < options.retry_budget; ++attempt) {
        const double x = rng.uniform(scene.region.min.x(), scene.region.max.x());
        const double z = rng.uniform(scene.region.min.y(), scene.region.max.y());
        const Vec2 c(x, z);
        if (options.constrained_relation && previous && !spec.is_table &&
            dominant_relation(*previous, c) != *options.constrained_relation) {
          continue;
        }
        if (discs.clear(c, r)) {
          accepted = c;
          break;
        }
      }
      if (accepted) break;
      if (scene.region_expansions >= options.max_expansions) {
        throw PlacementError("could not place instance after " +
                                 std::to_string(options.max_expansions) + " region expansions",
                             scene);
      }
      scene.region = scene.region.grown(options.growth);
      ++scene.region_expansions;
    }
    discs.add(*accepted, r);
    PlacedInstance inst;
    inst.spec = spec;
    inst.center = *accepted;
    inst.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    inst.effective_radius = r;
    scene.instances.push_back(std::move(inst));
    if (!spec.is_table) previous = *accepted;
  }
  scene.relations = tag_relations(scene);
  return scene;
}

// table tops -----------------------------------------------------------------

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

namespace {

Vec2 polygon_centroid(std::span<const Vec2> poly) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double w = p.x() * q.y() - q.x() * p.y();
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

using EdgeKey = std::array<double, 6>;

EdgeKey edge_key(const Vec3& a, const Vec3& b) {
  const bool swap = std::lexicographical_compare(b.data(), b.data() + 3, a.data(), a.data() + 3);
  const Vec3& lo = swap ? b : a;
  const Vec3& hi = swap ? a : b;
  return {lo.x(), lo.y(), lo.z(), hi.x(), hi.y(), hi.z()};
}

// Drops vertices that sit on the straight line between their neighbours.
std::vector<Vec2> drop_collinear(std::vector<Vec2> loop) {
  bool changed = true;
  while (changed && loop.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2& a = loop[(i + loop.size() - 1) % loop.size()];
      const Vec2& b = loop[i];
      const Vec2& c = loop[(i + 1) % loop.size()];
      const Vec2 u = b - a, v = c - b;
      const double cross = u.x() * v.y() - u.y() * v.x();
      if (std::abs(cross) <= 1e-12 * (u.norm() * v.norm() + 1e-300) && u.dot(v) >= 0.0) {
        loop.erase(loop.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return loop;
}

}  // namespace

double distance_to_boundary(std::span<const Vec2> poly, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return best;
}

bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

TableTop slice_table_top(const TriangleMesh& table, double epsilon) {
  if (table.empty()) throw Error(ErrorCode::EmptyInput, "cannot slice an empty mesh");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::DomainError, "slice epsilon must be positive");
  const double h = mesh_bounds(table).max.y() - epsilon;

  // Crossing points are identified by the mesh edge they lie on, so adjacent
  // triangles share endpoints exactly even when vertices are not welded.
  std::map<EdgeKey, std::size_t> point_ids;
  std::vector<Vec2> points;
  std::vector<std::vector<std::size_t>> adjacency;
  auto crossing = [&](const Vec3& a, const Vec3& b) {
    const auto key = edge_key(a, b);
    auto [it, inserted] = point_ids.emplace(key, points.size());
    if (inserted) {
      const Vec3 lo(key[0], key[1], key[2]);
      const Vec3 hi(key[3], key[4], key[5]);
      const double t = (h - lo.y()) / (hi.y() - lo.y());
      const Vec3 p = lo + t * (hi - lo);
      points.emplace_back(p.x(), p.z());
      adjacency.emplace_back();
    }
    return it->second;
  };

  for (const auto& f : table.faces) {
    std::array<const Vec3*, 3> v = {&table.vertices[f[0]], &table.vertices[f[1]], &table.vertices[f[2]]};
    std::vector<std::size_t> hits;
    for (int e = 0; e < 3; ++e) {
      const Vec3& a = *v[e];
      const Vec3& b = *v[(e + 1) % 3];
      if ((a.y() >= h) != (b.y() >= h)) hits.push_back(crossing(a, b));
    }
    if (hits.size() == 2 && hits[0] != hits[1]) {
      adjacency[hits[0]].push_back(hits[1]);
      adjacency[hits[1]].push_back(hits[0]);
    }
  }
  if (points.empty()) throw Error(ErrorCode::SliceFailed, "slice plane does not cross the mesh");

  std::vector<bool> used(points.size(), false);
  std::vector<Vec2> best;
  double best_area = 0.0;
  for (std::size_t start = 0; start < points.size(); ++start) {
    if (used[start] || adjacency[start].empty()) continue;
    std::vector<Vec2> loop;
    std::size_t prev = start, cur = start;
    bool closed = false;
    while (true) {
      used[cur] = true;
      loop.push_back(points[cur]);
      std::optional<std::size_t> next;
      for (auto n : adjacency[cur]) {
        if (n == start && n != prev && loop.size() > 2) {
          closed = true;
          break;
        }
        if (!used[n]) {
          next = n;
          break;
        }
      }
      if (closed || !next) break;
      prev = cur;
      cur = *next;
    }
    if (!closed || loop.size() < 3) continue;
    const double area = std::abs(polygon_area(loop));
    if (area > best_area) {
      best_area = area;
      best = std::move(loop);
    }
  }
  if (best.empty() || !(best_area > 0.0)) {
    throw Error(ErrorCode::SliceFailed, "slice produced no closed cross-section");
  }
  if (polygon_area(best) < 0.0) std::reverse(best.begin(), best.end());
  best = drop_collinear(std::move(best));

  TableTop top;
  top.centroid = polygon_centroid(best);
  top.polygon = std::move(best);
  top.top_height = h;
  return top;
}

TableTop place_table_top(const TableTop& local, const PlacedInstance& table) {
  const SimilarityTransform pose = instance_pose(table);
  auto map = [&](const Vec2& p) {
    const Vec3 w = pose.apply(Vec3(p.x(), local.top_height, p.y()));
    return Vec2(w.x(), w.z());
  };
  TableTop out;
  for (const auto& p : local.polygon) out.polygon.push_back(map(p));
  // Yaw about +y reverses the (x, z) winding only under reflection; keep CCW.
  if (polygon_area(out.polygon) < 0.0) std::reverse(out.polygon.begin(), out.polygon.end());
  out.centroid = map(local.centroid);
  out.top_height = pose.apply(Vec3(local.centroid.x(), local.top_height, local.centroid.y())).y();
  return out;
}

PlacedInstance stack_on_table(const TableTop& top, const InstanceSpec& object, std::size_t table_id,
                              const StackOptions& options) {
  if (top.polygon.size() < 3 || !(std::abs(polygon_area(top.polygon)) > 0.0)) {
    throw Error(ErrorCode::StackFailed, "table top polygon is degenerate");
  }
  if (!(object.base_radius > 0.0)) throw Error(ErrorCode::InvalidGeometry, "object radius must be positive");
  if (!point_in_polygon(top.polygon, top.centroid)) {
    throw Error(ErrorCode::StackFailed, "table top centroid lies outside its polygon");
  }
  const double allowed = distance_to_boundary(top.polygon, top.centroid) * options.margin;
  if (allowed < options.min_radius) {
    throw Error(ErrorCode::StackFailed, "table top too narrow to hold an object");
  }
  PlacedInstance inst;
  inst.spec = object;
  inst.spec.scale = std::min(object.scale, allowed / object.base_radius);
  inst.effective_radius = inst.spec.effective_radius();
  inst.center = top.centroid;
  inst.base_height = top.top_height;
  inst.stacked_on = table_id;
  return inst;
}

std::vector<RelationTag> tag_relations(const LayoutScene& scene) {
  std::vector<RelationTag> tags;
  const auto& inst = scene.instances;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (std::size_t j = i + 1; j < inst.size(); ++j) {
      if (inst[j].stacked_on == i) {
        tags.push_back({j, i, SpatialRelation::on_top_of});
      } else if (inst[i].stacked_on == j) {
        tags.push_back({i, j, SpatialRelation::on_top_of});
      } else {
        tags.push_back({j, i, dominant_relation(inst[i].center, inst[j].center)});
      }
    }
  }
  return tags;
}

LayoutScene synthesize_scene(std::span<const AssetEntry> assets, const SynthConfig& config,
                             std::uint64_t rng_seed) {
  if (assets.empty()) throw Error(ErrorCode::EmptyInput, "asset library is empty");
  if (config.min_objects < kMinSceneObjects || config.max_objects > kMaxSceneObjects ||
      config.min_objects > config.max_objects) {
    throw Error(ErrorCode::InvalidSceneSize, "object count range must lie within [2, 12]");
  }
  Rng rng(rng_seed);
  const auto n = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(config.min_objects),
                                                          static_cast<std::int64_t>(config.max_objects)));
  std::vector<InstanceSpec> specs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& asset = assets[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(assets.size()) - 1))];
    const double scale = rng.uniform(config.min_scale, config.max_scale);
    specs.push_back(make_instance_spec(asset.path, asset.mesh, scale, asset.is_table));
  }
  const double density = rng.uniform(config.min_density, config.max_density);
  const bool want_stack = rng.uniform() < config.stack_probability;
  const std::uint64_t place_seed = rng.next();

  // pick the table and the smallest non-table object for stacking
  std::optional<std::size_t> table_idx, stacked_idx;
  std::optional<TableTop> local_top;
  if (want_stack) {
    for (std::size_t i = 0; i < specs.size() && !table_idx; ++i) {
      if (specs[i].is_table) table_idx = i;
    }
    if (table_idx) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].is_table) continue;
        if (!stacked_idx || specs[i].effective_radius() < specs[*stacked_idx].effective_radius()) stacked_idx = i;
      }
      if (stacked_idx) {
        try {
          local_top = slice_table_top(*specs[*table_idx].mesh, config.slice_epsilon);
        } catch (const Error&) {
          stacked_idx.reset();
        }
      }
    }
  }

  std::vector<InstanceSpec> ground;
  const std::size_t skip = stacked_idx.value_or(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i == skip) continue;
    ground.push_back(specs[i]);
  }
  std::vector<double> radii;
  for (const auto& s : specs) radii.push_back(s.effective_radius());
  const double gap = compute_gap(radii, density);

  double disc_area = 0.0;
  for (const auto& s : ground) disc_area += std::numbers::pi * std::pow(s.effective_radius() + 0.5 * gap, 2);
  const double half = 0.5 * std::sqrt(config.region_area_factor * disc_area);
  const Rect2 region{Vec2(-half, -half), Vec2(half, half)};

  PlacementOptions placement = config.placement;
  placement.min_instances = stacked_idx ? kMinSceneObjects - 1 : kMinSceneObjects;
  LayoutScene scene = poisson_place(ground, region, gap, place_seed, placement);
  scene.rng_seed = rng_seed;

  if (stacked_idx) {
    std::size_t table_id = 0;
    while (!scene.instances[table_id].spec.is_table) ++table_id;
    const TableTop top = place_table_top(*local_top, scene.instances[table_id]);
    try {
      scene.instances.push_back(stack_on_table(top, specs[*stacked_idx], table_id, config.stack));
    } catch (const Error&) {
      // top too small to hold anything: everything goes on the ground
      placement.min_instances = kMinSceneObjects;
      scene = poisson_place(specs, region.grown(std::sqrt(2.0)), gap, place_seed, placement);
      scene.rng_seed = rng_seed;
    }
  }
  scene.relations = tag_relations(scene);
  return scene;
}

}  // namespace scenebench
