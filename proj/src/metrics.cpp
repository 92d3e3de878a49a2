#include "scenebench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace scenebench {

namespace {

void require_same_space(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "metrics need non-empty clouds");
  if (a.space != b.space)
    throw Error(ErrorCode::SpaceMismatch, "clouds live in different spaces: " + std::string(space_tag_name(a.space)) +
                                              " vs " + std::string(space_tag_name(b.space)));
}

// NN distance of every point of `from` to `to`.
std::vector<double> nn_distances(const PointCloud& from, const PointCloud& to) {
  const KdTree tree(to.points);
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) d[i] = tree.nearest(from.points[i]).distance;
  return d;
}

double mean_of(const std::vector<double>& d, bool squared) {
  double sum = 0.0;
  for (double x : d) sum += squared ? x * x : x;
  return sum / static_cast<double>(d.size());
}

PointCloud merged(std::span<const PointCloud> parts, const SimilarityTransform& t) {
  PointCloud out;
  if (!parts.empty()) out.space = parts.front().space;
  for (const auto& part : parts)
    for (const auto& p : part.points) out.points.push_back(t.apply(p));
  return out;
}

void check_matching(const Matching& matching, std::size_t n_pred, std::size_t n_gt) {
  if (matching.empty()) throw Error(ErrorCode::EmptyMatching, "matching is empty");
  std::set<std::size_t> seen_pred, seen_gt;
  for (const auto& [p, g] : matching) {
    if (p >= n_pred || g >= n_gt)
      throw Error(ErrorCode::InvalidMatching, "matching references missing instance (" + std::to_string(p) + ", " +
                                                  std::to_string(g) + ")");
    if (!seen_pred.insert(p).second || !seen_gt.insert(g).second)
      throw Error(ErrorCode::InvalidMatching, "matching uses an instance twice");
  }
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b, bool squared) {
  require_same_space(a, b);
  return 0.5 * (mean_of(nn_distances(a, b), squared) + mean_of(nn_distances(b, a), squared));
}

PrecisionRecall precision_recall(const PointCloud& pred, const PointCloud& gt, double tau) {
  require_same_space(pred, gt);
  if (!(tau > 0.0)) throw Error(ErrorCode::DomainError, "tau must be positive");
  const auto hits = [tau](const std::vector<double>& d) {
    return static_cast<double>(std::count_if(d.begin(), d.end(), [tau](double x) { return x < tau; })) /
           static_cast<double>(d.size());
  };
  PrecisionRecall out;
  out.precision = hits(nn_distances(pred, gt));
  out.recall = hits(nn_distances(gt, pred));
  const double s = out.precision + out.recall;
  out.fscore = s > 0.0 ? 200.0 * out.precision * out.recall / s : 0.0;
  return out;
}

double f_score(const PointCloud& pred, const PointCloud& gt, double tau) {
  return precision_recall(pred, gt, tau).fscore;
}

SceneMetrics scene_level_metrics(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                                 const SimilarityTransform& pred_transform,
                                 const SimilarityTransform& gt_transform, double tau, bool squared) {
  const PointCloud p = merged(pred, pred_transform);
  const PointCloud g = merged(gt, gt_transform);
  if (p.empty() || g.empty()) throw Error(ErrorCode::EmptyInput, "scene union is empty");
  return {chamfer_distance(p, g, squared), f_score(p, g, tau)};
}

ObjectMetrics object_level_metrics(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                                   const Matching& matching, const SimilarityTransform& pred_transform,
                                   const SimilarityTransform& gt_transform, double tau, bool squared) {
  check_matching(matching, pred.size(), gt.size());
  ObjectMetrics out;
  for (const auto& [pi, gi] : matching) {
    const PointCloud p = transform_cloud(pred[pi], pred_transform);
    const PointCloud g = transform_cloud(gt[gi], gt_transform);
    InstanceMetrics m;
    m.pred_id = pi;
    m.gt_id = gi;
    m.cd = chamfer_distance(p, g, squared);
    m.fscore = f_score(p, g, tau);
    const Aabb gb = Aabb::from_points(g.points);
    m.iou_skipped = !(gb.volume() > 0.0);
    m.iou = m.iou_skipped ? 0.0 : aabb_iou(Aabb::from_points(p.points), gb);
    out.cd += m.cd;
    out.fscore += m.fscore;
    out.per_instance.push_back(m);
  }
  out.cd /= static_cast<double>(matching.size());
  out.fscore /= static_cast<double>(matching.size());
  return out;
}

double aabb_iou(const Aabb& a, const Aabb& b) {
  double inter = 1.0;
  for (int i = 0; i < 3; ++i) inter *= std::max(0.0, std::min(a.max[i], b.max[i]) - std::max(a.min[i], b.min[i]));
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

IouResult volumetric_iou_aabb(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes,
                              const Matching& matching) {
  check_matching(matching, pred_boxes.size(), gt_boxes.size());
  IouResult out;
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < matching.size(); ++k) {
    const auto& [p, g] = matching[k];
    if (!(gt_boxes[g].volume() > 0.0)) {
      out.per_pair.push_back(std::numeric_limits<double>::quiet_NaN());
      out.skipped.push_back(k);
      continue;
    }
    const double v = aabb_iou(pred_boxes[p], gt_boxes[g]);
    out.per_pair.push_back(v);
    sum += v;
    ++counted;
  }
  out.mean = counted ? sum / static_cast<double>(counted) : 0.0;
  return out;
}

std::string_view matching_mode_name(MatchingMode m) {
  return m == MatchingMode::by_index ? "by_index" : "hungarian_iou";
}

MatchingMode parse_matching_mode(std::string_view name) {
  if (name == "by_index") return MatchingMode::by_index;
  if (name == "hungarian_iou") return MatchingMode::hungarian_iou;
  throw Error(ErrorCode::DomainError, "unknown matching mode '" + std::string(name) + "'");
}

Matching match_by_index(std::size_t pred_count, std::size_t gt_count) {
  Matching out;
  for (std::size_t i = 0; i < std::min(pred_count, gt_count); ++i) out.emplace_back(i, i);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost)
    if (r.size() != cols) throw Error(ErrorCode::ShapeError, "cost matrix rows differ in length");
  if (cols == 0) return {};
  if (rows > cols) {
    std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t[j][i] = cost[i][j];
    auto pairs = hungarian(t);
    for (auto& [a, b] : pairs) std::swap(a, b);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
  }

  // Kuhn-Munkres with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = rows, m = cols;
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out.emplace_back(p[j] - 1, j - 1);
  std::sort(out.begin(), out.end());
  return out;
}

Matching match_hungarian_iou(std::span<const Aabb> pred_boxes, std::span<const Aabb> gt_boxes) {
  std::vector<std::vector<double>> cost(pred_boxes.size(), std::vector<double>(gt_boxes.size()));
  for (std::size_t i = 0; i < pred_boxes.size(); ++i)
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) cost[i][j] = -aabb_iou(pred_boxes[i], gt_boxes[j]);
  Matching out = hungarian(cost);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

MetricsReport evaluate_scene(std::span<const PointCloud> pred, std::span<const PointCloud> gt,
                             const SceneEvalOptions& options) {
  if (pred.empty() || gt.empty()) throw Error(ErrorCode::EmptyInput, "scene has no instances");
  PointCloud pred_union = merged(pred, SimilarityTransform::identity());
  PointCloud gt_union = merged(gt, SimilarityTransform::identity());
  pred_union.space = gt_union.space = SpaceTag::raw;
  if (pred_union.empty() || gt_union.empty()) throw Error(ErrorCode::EmptyInput, "scene union is empty");

  const DualAlignment align =
      dual_normalization_align(pred_union, gt_union, options.icp, options.native_range, options.tau);

  // everything below is measured in the evaluation frame
  const auto to_eval = [](std::span<const PointCloud> parts, const SimilarityTransform& t) {
    std::vector<PointCloud> out;
    out.reserve(parts.size());
    for (const auto& part : parts) {
      PointCloud c = transform_cloud(part, t);
      c.space = SpaceTag::shared_normalized;
      c.normals.clear();
      out.push_back(std::move(c));
    }
    return out;
  };
  const std::vector<PointCloud> p = to_eval(pred, align.pred_to_eval);
  const std::vector<PointCloud> g = to_eval(gt, align.gt_to_eval);

  std::vector<Aabb> pred_boxes, gt_boxes;
  for (const auto& c : p) pred_boxes.push_back(Aabb::from_points(c.points));
  for (const auto& c : g) gt_boxes.push_back(Aabb::from_points(c.points));

  const Matching matching = options.matching == MatchingMode::by_index
                                ? match_by_index(p.size(), g.size())
                                : match_hungarian_iou(pred_boxes, gt_boxes);

  MetricsReport report;
  report.squared_cd = options.squared_cd;
  const SimilarityTransform id = SimilarityTransform::identity();
  const SceneMetrics scene = scene_level_metrics(p, g, id, id, options.tau, options.squared_cd);
  report.cd_scene = scene.cd;
  report.fscore_scene = scene.fscore;
  ObjectMetrics objects = object_level_metrics(p, g, matching, id, id, options.tau, options.squared_cd);
  report.cd_object = objects.cd;
  report.fscore_object = objects.fscore;
  const IouResult iou = volumetric_iou_aabb(pred_boxes, gt_boxes, matching);
  report.iou_b = iou.mean;
  report.iou_skipped = iou.skipped;
  report.per_instance = std::move(objects.per_instance);
  report.alignment.provenance = align.result.provenance;
  report.alignment.branch = align.result.selected_branch;
  report.alignment.fitness = align.result.fitness;
  report.alignment.rmse = align.result.rmse;
  report.alignment.transform = align.result.transform.matrix();
  return report;
}

}  // namespace scenebench
