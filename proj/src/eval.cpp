#include "scenebench/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "scenebench/io.hpp"
#include "scenebench/random.hpp"

namespace scenebench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedInstance {
  std::string file;
  std::uint64_t hash;
  PointCloud cloud;
};

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Samples are seeded by file content, so the same mesh yields the same points
// whatever its name or side.
std::vector<LoadedInstance> load_scene(const fs::path& dir, const EvalJob& job) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + ": scene directory missing");
  std::vector<LoadedInstance> out;
  for (const auto& file : list_instances(dir)) {
    const std::uint64_t hash = stable_hash(read_bytes(file), job.seed);
    out.push_back({file.filename().string(), hash, load_instance_cloud(file, job.samples_per_instance, hash)});
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, dir.string() + ": no instance files");
  return out;
}

SceneOutcome evaluate_one(const std::string& id, const EvalJob& job) {
  SceneOutcome outcome;
  outcome.scene_id = id;
  try {
    std::vector<LoadedInstance> pred = load_scene(job.pred_dir / id, job);
    std::vector<LoadedInstance> gt = load_scene(job.gt_dir / id, job);
    if (job.matching == MatchingMode::hungarian_iou) {
      // pred order carries no meaning here; a canonical order makes the
      // report independent of file naming
      std::stable_sort(pred.begin(), pred.end(), [](const auto& a, const auto& b) { return a.hash < b.hash; });
    }
    std::vector<PointCloud> p, g;
    for (auto& inst : pred) {
      outcome.pred_files.push_back(inst.file);
      p.push_back(std::move(inst.cloud));
    }
    for (auto& inst : gt) {
      outcome.gt_files.push_back(inst.file);
      g.push_back(std::move(inst.cloud));
    }
    SceneEvalOptions options;
    options.icp = job.icp;
    options.tau = job.tau;
    options.matching = job.matching;
    options.native_range = job.native_range;
    options.squared_cd = job.squared_cd;
    outcome.metrics = evaluate_scene(p, g, options);
  } catch (const Error& e) {
    outcome.metrics.reset();
    outcome.error_code = std::string(error_code_name(e.code()));
    outcome.error_message = e.what();
  } catch (const std::exception& e) {
    outcome.metrics.reset();
    outcome.error_code = "InternalError";
    outcome.error_message = e.what();
  }
  return outcome;
}

json q(double x) {
  if (!std::isfinite(x)) return nullptr;
  return quantize_report_value(x);
}

json row_json(const TableRow& r) {
  return {{"CD-S", q(r.cd_scene)},
          {"F-Score-S", q(r.fscore_scene)},
          {"CD-O", q(r.cd_object)},
          {"F-Score-O", q(r.fscore_object)},
          {"IoU-B", q(r.iou_b)}};
}

TableRow row_of(const MetricsReport& m) { return {m.cd_scene, m.fscore_scene, m.cd_object, m.fscore_object, m.iou_b}; }

std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", quantize_report_value(x));
  return buf;
}

}  // namespace

void EvalJob::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::DomainError, "tau must be positive");
  if (workers == 0) throw Error(ErrorCode::DomainError, "workers must be at least 1");
  if (samples_per_instance == 0) throw Error(ErrorCode::DomainError, "samples per instance must be positive");
  if (!(native_range.second > native_range.first))
    throw Error(ErrorCode::DomainError, "native range must satisfy lo < hi");
  icp.validate();
}

double quantize_report_value(double x) {
  const double r = std::round(x * 1e9) / 1e9;
  return r == 0.0 ? 0.0 : r;
}

std::vector<std::string> list_scenes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::JobError, dir.string() + ": not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> list_instances(const fs::path& scene_dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(scene_dir))
    if (e.is_regular_file() && is_shape_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

EvalSummary run_eval(const EvalJob& job) {
  job.validate();
  const std::vector<std::string> gt_scenes = list_scenes(job.gt_dir);
  const std::vector<std::string> pred_scenes = list_scenes(job.pred_dir);
  if (gt_scenes.empty()) throw Error(ErrorCode::JobError, job.gt_dir.string() + ": no scene directories");
  if (pred_scenes.empty()) throw Error(ErrorCode::JobError, job.pred_dir.string() + ": no scene directories");
  if (job.matching == MatchingMode::by_index && gt_scenes.size() != pred_scenes.size())
    throw Error(ErrorCode::JobError, "by_index mode needs equal scene counts (pred " +
                                         std::to_string(pred_scenes.size()) + ", gt " +
                                         std::to_string(gt_scenes.size()) + ")");

  EvalSummary summary;
  summary.scenes.resize(gt_scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < gt_scenes.size(); i = next++) summary.scenes[i] = evaluate_one(gt_scenes[i], job);
  };
  const std::size_t n = std::min(job.workers, gt_scenes.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  }

  TableRow sum;
  for (const auto& s : summary.scenes) {
    if (!s.ok()) {
      ++summary.failed;
      continue;
    }
    ++summary.scored;
    const TableRow r = row_of(*s.metrics);
    sum.cd_scene += r.cd_scene;
    sum.fscore_scene += r.fscore_scene;
    sum.cd_object += r.cd_object;
    sum.fscore_object += r.fscore_object;
    sum.iou_b += r.iou_b;
  }
  if (summary.scored > 0) {
    const double k = static_cast<double>(summary.scored);
    summary.mean = TableRow{sum.cd_scene / k, sum.fscore_scene / k, sum.cd_object / k, sum.fscore_object / k,
                            sum.iou_b / k};
  }
  return summary;
}

std::string report_json(const EvalSummary& summary, const EvalJob& job) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["config"] = {
      {"tau", job.tau},
      {"matching", matching_mode_name(job.matching)},
      {"cd_convention", job.squared_cd ? "mean_squared_nn_distance" : "mean_nn_distance"},
      {"samples_per_instance", job.samples_per_instance},
      {"seed", job.seed},
      {"native_range", {job.native_range.first, job.native_range.second}},
      {"icp",
       {{"voxel_size", job.icp.voxel_size},
        {"estimate_scale", job.icp.estimate_scale},
        {"total_iterations", job.icp.total_iterations},
        {"up_axis", job.icp.up_axis},
        {"trim_ratio", job.icp.trim_ratio},
        {"keep_top_yaw", job.icp.keep_top_yaw},
        {"center_init", job.icp.center_init}}},
  };
  json scenes = json::array();
  for (const auto& s : summary.scenes) {
    json j;
    j["scene"] = s.scene_id;
    if (!s.ok()) {
      j["status"] = "failed";
      j["error"] = {{"code", s.error_code}, {"message", s.error_message}};
      scenes.push_back(std::move(j));
      continue;
    }
    const MetricsReport& m = *s.metrics;
    j["status"] = "ok";
    j["metrics"] = row_json(row_of(m));
    json transform = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) transform.push_back(q(m.alignment.transform(r, c)));
    j["alignment"] = {{"provenance", provenance_name(m.alignment.provenance)},
                      {"branch", branch_name(m.alignment.branch)},
                      {"fitness", q(m.alignment.fitness)},
                      {"rmse", q(m.alignment.rmse)},
                      {"transform", std::move(transform)}};
    json instances = json::array();
    for (const auto& inst : m.per_instance) {
      instances.push_back({{"pred", inst.pred_id},
                           {"gt", inst.gt_id},
                           {"pred_file", s.pred_files.at(inst.pred_id)},
                           {"gt_file", s.gt_files.at(inst.gt_id)},
                           {"cd", q(inst.cd)},
                           {"fscore", q(inst.fscore)},
                           {"iou", inst.iou_skipped ? json(nullptr) : q(inst.iou)}});
    }
    j["instances"] = std::move(instances);
    j["iou_skipped"] = m.iou_skipped;
    scenes.push_back(std::move(j));
  }
  doc["scenes"] = std::move(scenes);
  doc["summary"] = {{"scored", summary.scored},
                    {"failed", summary.failed},
                    {"mean", summary.mean ? row_json(*summary.mean) : json(nullptr)}};
  return doc.dump(2) + "\n";
}

std::string report_csv(const EvalSummary& summary) {
  std::string out = "scene,CD-S,F-Score-S,CD-O,F-Score-O,IoU-B,status\n";
  auto row = [&](const std::string& name, const TableRow& r, const std::string& status) {
    out += name + "," + csv_number(r.cd_scene) + "," + csv_number(r.fscore_scene) + "," + csv_number(r.cd_object) +
           "," + csv_number(r.fscore_object) + "," + csv_number(r.iou_b) + "," + status + "\n";
  };
  for (const auto& s : summary.scenes) {
    if (s.ok()) row(s.scene_id, row_of(*s.metrics), "ok");
    else out += s.scene_id + ",,,,,,failed:" + s.error_code + "\n";
  }
  if (summary.mean) row("mean", *summary.mean, std::to_string(summary.scored) + "/" +
                                                    std::to_string(summary.scored + summary.failed));
  else out += "mean,,,,,,0/" + std::to_string(summary.failed) + "\n";
  return out;
}

fs::path write_reports(const EvalSummary& summary, const EvalJob& job) {
  if (job.output.empty()) throw Error(ErrorCode::JobError, "no output path");
  if (job.output.has_parent_path()) fs::create_directories(job.output.parent_path());
  fs::path csv = job.output;
  csv.replace_extension(".csv");
  if (csv == job.output) throw Error(ErrorCode::JobError, "output must not be the .csv table path");
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
  };
  write(job.output, report_json(summary, job));
  write(csv, report_csv(summary));
  return csv;
}

}  // namespace scenebench
