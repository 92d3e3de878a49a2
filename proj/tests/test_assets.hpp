#pragma once

#include <memory>
#include <vector>

#include "scenebench/layout.hpp"

namespace scenebench::fixtures {

// Small procedural asset library: boxes of assorted footprints, a cylinder and
// a table, enough to exercise placement, stacking and registration.
inline std::vector<AssetEntry> procedural_assets() {
  std::vector<AssetEntry> lib;
  auto add = [&](const char* name, TriangleMesh mesh, bool table = false) {
    lib.push_back({name, std::make_shared<const TriangleMesh>(std::move(mesh)), table});
  };
  add("box_a.obj", make_box(Vec3(0, 0, 0), Vec3(0.4, 0.5, 0.3)));
  add("box_b.obj", make_box(Vec3(0, 0, 0), Vec3(0.8, 0.3, 0.5)));
  add("tall.obj", make_box(Vec3(0, 0, 0), Vec3(0.25, 1.1, 0.25)));
  add("plate.obj", make_box(Vec3(0, 0, 0), Vec3(0.6, 0.08, 0.9)));
  add("drum.obj", make_cylinder(Vec3(0, 0, 0), 0.3, 0.6, 24));
  add("table.obj", make_table(1.2, 0.75, 0.8), true);
  return lib;
}

}  // namespace scenebench::fixtures
