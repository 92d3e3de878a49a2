#pragma once

#include <utility>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/registration.hpp"

namespace scenebench {

inline constexpr double kDefaultTau = 0.1;

/// CD = (mean_a d(a, b) + mean_b d(b, a)) / 2 with unsquared NN distances, or
/// squared ones when `squared` is set.
double chamfer_distance(const PointCloud& a, const PointCloud& b, bool squared = false);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;  // percent
};

/// A point hits when its NN distance to the other set is strictly below tau.
PrecisionRecall precision_recall(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);
double f_score(const PointCloud& pred, const PointCloud& gt, double tau = kDefaultTau);

struct SceneMetrics {
  double cd = 0.0;
  double fscore = 0.0;
};

/// Metrics on the unions, predictions mapped by `pred_transform` and ground
/// truth by `gt_transform`.
SceneMetrics scene_level_metrics(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                                 const SimilarityTransform& pred_transform,
                                 const SimilarityTransform& gt_transform = {},
                                 double tau = kDefaultTau, bool squared = false);

using Matching = std::vector<std::pair<std::size_t, std::size_t>>;  // (pred_id, gt_id)

struct InstanceMetrics {
  std::size_t pred_id = 0;
  std::size_t gt_id = 0;
  double cd = 0.0;
  double fscore = 0.0;
  double iou = 0.0;
  bool iou_skipped = false;  // degenerate ground-truth box
};

struct ObjectMetrics {
  double cd = 0.0;
  double fscore = 0.0;
  std::vector<InstanceMetrics> per_instance;
};

ObjectMetrics object_level_metrics(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                                   const Matching& matching,
                                   const SimilarityTransform& pred_transform,
                                   const SimilarityTransform& gt_transform = {},
                                   double tau = kDefaultTau, bool squared = false);

double aabb_iou(const Aabb& a, const Aabb& b);

struct IouResult {
  double mean = 0.0;
  std::vector<double> per_pair;        // NaN where skipped
  std::vector<std::size_t> skipped;    // indices into the matching
};

/// Mean IoU over matched pairs; pairs whose ground-truth box has zero volume
/// are skipped and listed.
IouResult volumetric_iou_aabb(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes,
                              const Matching& matching);

enum class MatchingMode { by_index, hungarian_iou };

std::string_view matching_mode_name(MatchingMode m);
MatchingMode parse_matching_mode(std::string_view name);

Matching match_by_index(std::size_t pred_count, std::size_t gt_count);

/// Minimum-cost assignment on a rows x cols cost matrix (rows <= cols after
/// internal transposition); returns (row, col) pairs sorted by row.
std::vector<std::pair<std::size_t, std::size_t>> hungarian(const std::vector<std::vector<double>>& cost);

/// Maximum total IoU assignment, sorted by gt id.
Matching match_hungarian_iou(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes);

struct AlignmentSummary {
  StageProvenance provenance = StageProvenance::identity_fallback;
  NormalizationBranch branch = NormalizationBranch::minmax;
  double fitness = 0.0;
  double rmse = 0.0;
  Mat4 transform = Mat4::Identity();
};

struct MetricsReport {
  double cd_scene = 0.0;
  double fscore_scene = 0.0;
  double cd_object = 0.0;
  double fscore_object = 0.0;
  double iou_b = 0.0;
  std::vector<InstanceMetrics> per_instance;
  std::vector<std::size_t> iou_skipped;
  AlignmentSummary alignment;
  bool squared_cd = false;
};

struct SceneEvalOptions {
  IcpConfig icp;
  double tau = kDefaultTau;
  MatchingMode matching = MatchingMode::by_index;
  std::pair<double, double> native_range = {-0.5, 0.5};
  bool squared_cd = false;
};

/// Aligns the prediction with dual normalization, then scores scene, objects
/// and boxes in the selected evaluation frame.
MetricsReport evaluate_scene(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                             const SceneEvalOptions& options);

}  // namespace scenebench
