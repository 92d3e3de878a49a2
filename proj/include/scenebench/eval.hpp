#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenebench/metrics.hpp"
#include "scenebench/registration.hpp"

namespace scenebench {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::size_t kMetricSamplesPerInstance = 10000;

/// pred_dir and gt_dir hold one subdirectory per scene; each scene directory
/// holds one .ply/.obj file per instance, paired by sorted file name.
struct EvalJob {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  IcpConfig icp;
  double tau = kDefaultTau;
  MatchingMode matching = MatchingMode::by_index;
  std::filesystem::path output;  // JSON report; the CSV table goes next to it
  std::size_t workers = 1;
  std::size_t samples_per_instance = kMetricSamplesPerInstance;
  std::uint64_t seed = 0;
  std::pair<double, double> native_range = {-0.5, 0.5};
  bool squared_cd = false;

  /// Throws DomainError on bad parameters.
  void validate() const;
};

struct SceneOutcome {
  std::string scene_id;
  std::optional<MetricsReport> metrics;
  std::vector<std::string> pred_files;  // in the order metrics refer to them
  std::vector<std::string> gt_files;
  std::string error_code;  // empty when scored
  std::string error_message;

  bool ok() const { return metrics.has_value(); }
};

/// One row of the results table.
struct TableRow {
  double cd_scene = 0.0;
  double fscore_scene = 0.0;
  double cd_object = 0.0;
  double fscore_object = 0.0;
  double iou_b = 0.0;
};

struct EvalSummary {
  std::vector<SceneOutcome> scenes;  // sorted by scene id
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::optional<TableRow> mean;  // over scored scenes

  bool partial() const { return failed > 0; }
};

/// Reports carry values rounded to 9 decimals; -0 prints as 0.
double quantize_report_value(double x);

/// Scene ids present in `dir` (subdirectory names, sorted).
std::vector<std::string> list_scenes(const std::filesystem::path& dir);

/// Instance files of a scene directory (sorted).
std::vector<std::filesystem::path> list_instances(const std::filesystem::path& scene_dir);

/// Evaluates every scene of gt_dir against its counterpart in pred_dir with a
/// bounded worker pool. A failing scene is recorded, never fatal. Throws
/// JobError when either directory has no scenes, or when by_index mode sees
/// differing scene counts.
EvalSummary run_eval(const EvalJob& job);

std::string report_json(const EvalSummary& summary, const EvalJob& job);
std::string report_csv(const EvalSummary& summary);

/// Writes job.output and the CSV next to it (same stem, .csv); returns the CSV path.
std::filesystem::path write_reports(const EvalSummary& summary, const EvalJob& job);

}  // namespace scenebench
