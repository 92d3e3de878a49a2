#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "scenebench/io.hpp"
#include "test_assets.hpp"

namespace scenebench::fixtures {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("scenebench_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// The procedural library written out as files, alternating OBJ and PLY.
inline void write_procedural_assets(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  int k = 0;
  for (const auto& asset : procedural_assets()) {
    std::filesystem::path name = asset.path;
    if (k++ % 2) name.replace_extension(".ply");
    write_shape(dir / name, from_mesh(*asset.mesh));
  }
}

// One directory per scene under `root`, each holding the posed instance meshes
// of a synthesized scene (inst_00.ply, inst_01.ply, ...).
inline void write_eval_scenes(const std::filesystem::path& root, std::size_t count, const SynthConfig& config,
                              std::uint64_t seed) {
  const auto assets = procedural_assets();
  for (std::size_t i = 0; i < count; ++i) {
    const LayoutScene scene = synthesize_scene(assets, config, seed + i);
    const auto dir = root / ("scene_" + std::to_string(i));
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < scene.instances.size(); ++k) {
      const auto& inst = scene.instances[k];
      const std::string name = std::string("inst_") + (k < 10 ? "0" : "") + std::to_string(k) + ".ply";
      write_ply(dir / name, from_mesh(transform_mesh(*inst.spec.mesh, instance_pose(inst))));
    }
  }
}

}  // namespace scenebench::fixtures
