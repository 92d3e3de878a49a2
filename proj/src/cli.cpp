#include "scenebench/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "scenebench/eval.hpp"
#include "scenebench/io.hpp"
#include "scenebench/layout.hpp"
#include "scenebench/manifest.hpp"
#include "scenebench/random.hpp"
#include "scenebench/registration.hpp"
#include "scenebench/sca_flow.hpp"
#include "scenebench/view_space.hpp"

namespace scenebench::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string log_level = "warn";
};

class Stopwatch {
 public:
  explicit Stopwatch(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    spdlog::info("{} took {:.3f} s", stage_, s);
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr first;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!first) first = std::current_exception();
      }
    }
  };
  const std::size_t w = std::min(std::max<std::size_t>(workers, 1), n);
  if (w <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(body);
  }
  if (first) std::rethrow_exception(first);
}

json mat_json(const Mat4& m) {
  json out = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out.push_back(round_significant(m(r, c)));
  return out;
}

json vec_json(const Vec3& v) {
  return json::array({round_significant(v.x()), round_significant(v.y()), round_significant(v.z())});
}

Vec3 parse_vec3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidCamera, ctx + ": expected 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::InvalidCamera, ctx + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

int parse_axis(const std::string& s) {
  if (s == "x" || s == "0") return 0;
  if (s == "y" || s == "1") return 1;
  if (s == "z" || s == "2") return 2;
  throw Error(ErrorCode::DomainError, "up axis must be x, y or z");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

void print_error(std::ostream& err, const std::string& code, int exit, const std::string& message) {
  err << json{{"error", {{"code", code}, {"exit", exit}, {"message", message}}}}.dump() << "\n";
}

// Every long option can also be set through SCENEBENCH_<NAME>.
void attach_env(CLI::App& app) {
  for (CLI::Option* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    std::string env = kEnvPrefix;
    for (char c : names.front()) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    opt->envname(env);
  }
  for (CLI::App* sub : app.get_subcommands({})) attach_env(*sub);
}

// ---- synth ----

struct SynthArgs {
  fs::path assets;
  fs::path out;
  std::size_t count = 1;
  std::size_t min_objects = kMinSceneObjects;
  std::size_t max_objects = kMaxSceneObjects;
  bool export_instances = false;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
  Stopwatch timer("synth");
  const std::vector<AssetEntry> assets = load_assets(a.assets);
  SynthConfig config;
  config.min_objects = a.min_objects;
  config.max_objects = a.max_objects;
  config.placement.min_instances = a.min_objects;
  config.placement.max_instances = a.max_objects;
  fs::create_directories(a.out);

  struct Outcome {
    std::string id;
    std::size_t instances = 0;
    std::string error_code, message;
  };
  std::vector<Outcome> outcomes(a.count);
  parallel_for(a.count, g.workers, [&](std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%05zu", i);
    Outcome& o = outcomes[i];
    o.id = name;
    try {
      const LayoutScene scene = synthesize_scene(assets, config, stable_hash(o.id, g.seed));
      const fs::path dir = a.out / o.id;
      fs::create_directories(dir);
      save_manifest(dir / "manifest.json", manifest_from_scene(scene, dir));
      if (a.export_instances) {
        for (std::size_t k = 0; k < scene.instances.size(); ++k) {
          const auto& inst = scene.instances[k];
          char file[32];
          std::snprintf(file, sizeof file, "inst_%02zu.ply", k);
          write_ply(dir / file, from_mesh(transform_mesh(*inst.spec.mesh, instance_pose(inst))));
        }
      }
      o.instances = scene.instances.size();
    } catch (const Error& e) {
      o.error_code = std::string(error_code_name(e.code()));
      o.message = e.what();
    }
  });

  json scenes = json::array();
  std::size_t failed = 0;
  for (const auto& o : outcomes) {
    if (o.error_code.empty()) {
      scenes.push_back({{"scene", o.id}, {"status", "ok"}, {"instances", o.instances}});
    } else {
      ++failed;
      scenes.push_back({{"scene", o.id}, {"status", "failed"}, {"error", {{"code", o.error_code}, {"message", o.message}}}});
    }
  }
  out << json{{"out", a.out.string()}, {"scenes", scenes}, {"failed", failed}}.dump(2) << "\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

// ---- views ----

struct ViewsArgs {
  fs::path manifest;
  fs::path out;
  fs::path camera_file;
  std::size_t cameras = 8;
  double radius = 0.0;  // 0: derived from the scene bounds
  double elevation_deg = 30.0;
  int resolution = 256;
  double fov_deg = 60.0;
  double threshold = 0.0;
  std::size_t samples = 4000;
};

std::vector<CameraPose> ring_cameras(const Aabb& box, std::size_t n, double radius, double elevation_deg) {
  const Vec3 c = box.center();
  const double r = radius > 0.0 ? radius : std::max(1.0, 1.5 * box.extent().norm());
  const double el = elevation_deg * M_PI / 180.0;
  std::vector<CameraPose> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double az = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
    CameraPose cam;
    cam.position = c + r * Vec3(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
    cam.look_at = c;
    cam.up_hint = Vec3::UnitY();
    out.push_back(cam);
  }
  return out;
}

std::vector<CameraPose> read_camera_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path.string() + ": cannot open camera file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidCamera, path.string() + ": " + e.what());
  }
  if (!doc.contains("cameras") || !doc["cameras"].is_array())
    throw Error(ErrorCode::InvalidCamera, path.string() + ": expected {\"cameras\": [...]}");
  std::vector<CameraPose> out;
  for (std::size_t i = 0; i < doc["cameras"].size(); ++i) {
    const json& j = doc["cameras"][i];
    const std::string ctx = "cameras[" + std::to_string(i) + "]";
    CameraPose cam;
    cam.position = parse_vec3(j.value("position", json()), ctx + ".position");
    cam.look_at = parse_vec3(j.value("look_at", json()), ctx + ".look_at");
    if (j.contains("up")) cam.up_hint = parse_vec3(j["up"], ctx + ".up");
    out.push_back(cam);
  }
  return out;
}

int cmd_views(const ViewsArgs& a, const Globals& g, std::ostream& out) {
  Stopwatch timer("views");
  if (a.samples == 0) throw Error(ErrorCode::DomainError, "samples must be positive");
  const SceneManifest manifest = load_manifest(a.manifest);
  const std::vector<PlacedInstance> placed = manifest_instances(manifest, a.manifest.parent_path());
  if (placed.empty()) throw Error(ErrorCode::EmptyInput, "manifest has no instances");

  LayoutScene scene;
  scene.instances = placed;
  std::vector<PointCloud> clouds;
  Aabb box;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const TriangleMesh posed = transform_mesh(*placed[i].spec.mesh, instance_pose(placed[i]));
    PointCloud c = sample_surface(posed, a.samples, stable_hash("view-sample/" + std::to_string(i), g.seed));
    c.normals.clear();
    const Aabb b = Aabb::from_points(c.points);
    box = i == 0 ? b : box.merged(b);
    clouds.push_back(std::move(c));
  }

  const std::vector<CameraPose> cameras =
      a.camera_file.empty() ? ring_cameras(box, a.cameras, a.radius, a.elevation_deg) : read_camera_file(a.camera_file);
  for (const auto& cam : cameras) world_to_camera(cam);  // rejects degenerate cameras up front
  RasterConfig raster;
  raster.resolution = a.resolution;
  raster.fov_y_deg = a.fov_deg;

  std::vector<ViewDecision> decisions(cameras.size());
  parallel_for(cameras.size(), g.workers,
               [&](std::size_t i) { decisions[i] = evaluate_view(clouds, cameras[i], raster, a.threshold); });

  const ScenePoses canonical = scene_poses(scene);
  json views = json::array();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    json v;
    v["index"] = i;
    v["position"] = vec_json(cameras[i].position);
    v["look_at"] = vec_json(cameras[i].look_at);
    v["up"] = vec_json(cameras[i].up_hint);
    v["keep"] = decisions[i].keep;
    json fractions = json::array();
    for (double f : decisions[i].fractions) fractions.push_back(round_significant(f));
    v["visibility"] = std::move(fractions);
    v["world_to_camera"] = mat_json(world_to_camera(cameras[i]).matrix());
    if (decisions[i].keep) {
      ++kept;
      json poses = json::array();
      for (const auto& p : to_view_centric(canonical, cameras[i]).poses) poses.push_back(mat_json(p.matrix()));
      v["instance_poses"] = std::move(poses);
    }
    views.push_back(std::move(v));
  }
  const json doc = {{"schema_version", 1},
                    {"manifest", a.manifest.generic_string()},
                    {"views", std::move(views)},
                    {"kept", kept},
                    {"discarded", cameras.size() - kept}};
  const std::string text = doc.dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  out << text;
  return kExitOk;
}

// ---- icp ----

struct IcpArgs {
  fs::path source;
  fs::path target;
  fs::path report;
  bool scale = false;
  int iters = 60;
  std::string up = "y";
  double voxel = 0.03;
  bool single = false;
  std::vector<double> native_range = {-0.5, 0.5};
  std::size_t samples = kMetricSamplesPerInstance;
};

int cmd_icp(const IcpArgs& a, const Globals& g, std::ostream& out) {
  Stopwatch timer("icp");
  IcpConfig cfg;
  cfg.estimate_scale = a.scale;
  cfg.total_iterations = a.iters;
  cfg.up_axis = parse_axis(a.up);
  cfg.voxel_size = a.voxel;
  cfg.rng_seed = g.seed;
  cfg.validate();
  if (a.native_range.size() != 2) throw Error(ErrorCode::DomainError, "native range takes two values");
  const PointCloud source = load_instance_cloud(a.source, a.samples, stable_hash("source", g.seed));
  const PointCloud target = load_instance_cloud(a.target, a.samples, stable_hash("target", g.seed));

  json doc;
  IcpResult result;
  SimilarityTransform raw;
  if (a.single) {
    result = robust_icp(source, target, cfg);
    raw = result.raw_transform();
    doc["branch"] = nullptr;
  } else {
    const DualAlignment d = dual_normalization_align(source, target, cfg, {a.native_range[0], a.native_range[1]});
    result = d.result;
    raw = d.gt_to_eval.inverse() * d.pred_to_eval;
    doc["branch"] = branch_name(result.selected_branch);
    doc["fscore_minmax"] = round_significant(d.fscore_minmax);
    doc["fscore_aabb"] = round_significant(d.fscore_aabb);
  }
  doc["transform"] = mat_json(raw.matrix());
  doc["normalized_transform"] = mat_json(result.transform.matrix());
  doc["fitness"] = round_significant(result.fitness);
  doc["rmse"] = round_significant(result.rmse);
  doc["provenance"] = provenance_name(result.provenance);
  doc["iterations"] = result.iterations;
  doc["failure"] = result.failure.empty() ? json(nullptr) : json(result.failure);
  const std::string text = doc.dump(2) + "\n";
  if (!a.report.empty()) write_text(a.report, text);
  out << text;
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  fs::path pred;
  fs::path gt;
  fs::path out;
  double tau = kDefaultTau;
  std::string matching = "by_index";
  std::size_t samples = kMetricSamplesPerInstance;
  bool scale = false;
  bool squared_cd = false;
  double voxel = 0.03;
  int iters = 60;
  std::string up = "y";
  std::vector<double> native_range = {-0.5, 0.5};
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out) {
  Stopwatch timer("eval");
  EvalJob job;
  job.pred_dir = a.pred;
  job.gt_dir = a.gt;
  job.output = a.out;
  job.tau = a.tau;
  job.matching = parse_matching_mode(a.matching);
  job.samples_per_instance = a.samples;
  job.squared_cd = a.squared_cd;
  job.workers = g.workers;
  job.seed = g.seed;
  job.icp.estimate_scale = a.scale;
  job.icp.voxel_size = a.voxel;
  job.icp.total_iterations = a.iters;
  job.icp.up_axis = parse_axis(a.up);
  job.icp.rng_seed = g.seed;
  if (a.native_range.size() != 2) throw Error(ErrorCode::DomainError, "native range takes two values");
  job.native_range = {a.native_range[0], a.native_range[1]};
  job.validate();

  const EvalSummary summary = run_eval(job);
  const fs::path csv = write_reports(summary, job);
  for (const auto& s : summary.scenes)
    if (!s.ok()) spdlog::warn("scene {} failed: {}", s.scene_id, s.error_message);
  out << report_csv(summary);
  spdlog::info("wrote {} and {}", job.output.string(), csv.string());
  return summary.partial() ? kExitPartial : kExitOk;
}

// ---- verify-sca ----

int cmd_verify(int trials, const Globals& g, std::ostream& out) {
  Stopwatch timer("verify-sca");
  if (trials <= 0) throw Error(ErrorCode::DomainError, "trials must be positive");
  const sca::VerificationReport r = sca::verify_equivalence(trials, g.seed);
  out << json{{"trials", r.trials},
              {"max_equivalence_deviation", r.max_equivalence_deviation},
              {"max_duplicate_deviation", r.max_duplicate_deviation},
              {"max_row_sum_deviation", r.max_row_sum_deviation},
              {"equivalence_tolerance", r.equivalence_tolerance},
              {"duplicate_tolerance", r.duplicate_tolerance},
              {"passed", r.passed()}}
             .dump(2)
      << "\n";
  return r.passed() ? kExitOk : kExitRuntime;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::PlacementFailed:
    case ErrorCode::SliceFailed:
    case ErrorCode::StackFailed:
    case ErrorCode::NoOverlap:
    case ErrorCode::IoError:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"scene generation, registration and evaluation toolkit", "scenebench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "base RNG seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
      ->capture_default_str();

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "generate random scenes and their manifests");
  s->add_option("--assets", synth.assets, "directory of .ply/.obj assets")->required();
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--count", synth.count, "number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--min-objects", synth.min_objects)->capture_default_str();
  s->add_option("--max-objects", synth.max_objects)->capture_default_str();
  s->add_flag("--export-instances", synth.export_instances, "also write each posed instance as a PLY mesh");

  ViewsArgs views;
  CLI::App* v = app.add_subcommand("views", "convert a scene to view-centric frames and drop occluded views");
  v->add_option("--manifest", views.manifest)->required();
  v->add_option("--out", views.out, "JSON output file (also printed)");
  v->add_option("--camera-file", views.camera_file, "JSON {\"cameras\": [{position, look_at, up}]}");
  v->add_option("--cameras", views.cameras, "ring cameras when no camera file is given")->capture_default_str();
  v->add_option("--radius", views.radius, "ring radius, 0 derives it from the scene")->capture_default_str();
  v->add_option("--elevation", views.elevation_deg, "ring elevation in degrees")->capture_default_str();
  v->add_option("--resolution", views.resolution)->capture_default_str();
  v->add_option("--fov", views.fov_deg, "vertical field of view in degrees")->capture_default_str();
  v->add_option("--threshold", views.threshold, "discard when an instance's visible fraction is <= this")
      ->capture_default_str();
  v->add_option("--samples", views.samples, "surface samples per instance")->capture_default_str();

  IcpArgs icp;
  CLI::App* i = app.add_subcommand("icp", "align a source cloud or mesh to a target");
  i->add_option("--source", icp.source)->required();
  i->add_option("--target", icp.target)->required();
  i->add_option("--report", icp.report, "JSON output file (also printed)");
  i->add_flag("--scale", icp.scale, "estimate isotropic scale");
  i->add_option("--iters", icp.iters, "total iteration budget")->capture_default_str();
  i->add_option("--up", icp.up, "up axis: x, y or z")->capture_default_str();
  i->add_option("--voxel", icp.voxel, "voxel size in normalized units")->capture_default_str();
  i->add_flag("--single", icp.single, "skip dual normalization, run one robust ICP");
  i->add_option("--native-range", icp.native_range, "prediction output range lo hi")->expected(2);
  i->add_option("--samples", icp.samples, "surface samples for mesh inputs")->capture_default_str();

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "align and score predicted scenes against ground truth");
  e->add_option("--pred", ev.pred)->required();
  e->add_option("--gt", ev.gt)->required();
  e->add_option("--out", ev.out, "JSON report; the CSV table is written next to it")->required();
  e->add_option("--tau", ev.tau, "F-score threshold")->capture_default_str();
  e->add_option("--matching", ev.matching)->check(CLI::IsMember({"by_index", "hungarian_iou"}))->capture_default_str();
  e->add_option("--samples", ev.samples, "surface samples per instance")->capture_default_str();
  e->add_flag("--scale", ev.scale, "estimate scale during alignment");
  e->add_flag("--squared-cd", ev.squared_cd, "chamfer over squared distances");
  e->add_option("--voxel", ev.voxel)->capture_default_str();
  e->add_option("--iters", ev.iters)->capture_default_str();
  e->add_option("--up", ev.up)->capture_default_str();
  e->add_option("--native-range", ev.native_range, "prediction output range lo hi")->expected(2);

  int trials = 1000;
  CLI::App* x = app.add_subcommand("verify-sca", "check the attention equivalence numerically");
  x->add_option("--trials", trials)->capture_default_str();

  attach_env(app);

  std::vector<std::string> argv_store;
  argv_store.push_back("scenebench");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    print_error(err, "UsageError", kExitValidation, pe.what());
    return kExitValidation;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("scenebench", sink);
  logger->set_level(spdlog::level::from_str(g.log_level));
  logger->set_pattern("[%l] %v");
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  try {
    if (s->parsed()) return cmd_synth(synth, g, out);
    if (v->parsed()) return cmd_views(views, g, out);
    if (i->parsed()) return cmd_icp(icp, g, out);
    if (e->parsed()) return cmd_eval(ev, g, out);
    if (x->parsed()) return cmd_verify(trials, g, out);
  } catch (const Error& ex) {
    const int code = exit_code_for(ex.code());
    print_error(err, std::string(error_code_name(ex.code())), code, ex.what());
    return code;
  } catch (const std::exception& ex) {
    print_error(err, "InternalError", kExitRuntime, ex.what());
    return kExitRuntime;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace scenebench::cli
