#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "scenebench/geometry.hpp"

namespace scenebench {

enum class StageProvenance { fine, coarse_fallback, identity_fallback };
enum class NormalizationBranch { minmax, aabb_recentered };

std::string_view provenance_name(StageProvenance p);
std::string_view branch_name(NormalizationBranch b);

struct IcpConfig {
  int up_axis = 1;  // 0=x, 1=y, 2=z
  std::vector<double> yaw_candidates_deg = {0, 45, 90, 135, 180, 225, 270, 315};
  double trim_ratio = 0.2;
  std::size_t prescore_sample_cap = 2000;
  std::size_t keep_top_yaw = 3;
  double voxel_size = 0.03;
  bool estimate_scale = false;
  int total_iterations = 60;
  int seed_iterations = 15;

  // thresholds and robust scale, in multiples of voxel_size
  double tukey_k_factor = 1.5;
  double coarse_threshold_factor = 2.5;
  double fine_p2l_threshold_factor = 1.0;
  double fine_p2p_threshold_factor = 1.5;
  double selection_lambda_factor = 1.0;

  std::size_t normal_k = 16;
  double convergence_epsilon = 1e-7;
  double max_translation = 4.0;
  double rigid_det_tolerance = 0.01;
  /// Seed each yaw candidate with centroid alignment (and an RMS-radius scale
  /// guess when estimate_scale is on) instead of a pure rotation.
  bool center_init = true;
  std::uint64_t rng_seed = 0;
  /// Skips the yaw sweep and starts the coarse stage here.
  std::optional<SimilarityTransform> init_override;

  double tukey_k() const { return tukey_k_factor * voxel_size; }
  double coarse_threshold() const { return coarse_threshold_factor * voxel_size; }
  double fine_p2l_threshold() const { return fine_p2l_threshold_factor * voxel_size; }
  double fine_p2p_threshold() const { return fine_p2p_threshold_factor * voxel_size; }
  double selection_lambda() const { return selection_lambda_factor * voxel_size; }

  /// Throws DomainError when a field is out of range.
  void validate() const;
};

/// (T_coarse, T_fine) = (max(10, floor(T/2)), max(10, T - T_coarse)).
std::pair<int, int> iteration_split(int total);

struct Normalization {
  Vec3 center = Vec3::Zero();
  double sigma = 1.0;

  SimilarityTransform forward() const;
};

struct IcpResult {
  SimilarityTransform transform;  // normalized space
  double fitness = 0.0;
  double rmse = 0.0;
  StageProvenance provenance = StageProvenance::identity_fallback;
  Normalization normalization;
  NormalizationBranch selected_branch = NormalizationBranch::minmax;
  int iterations = 0;
  /// Truncated rmse sqrt(mean(min(d^2, th^2))) after each accepted iteration
  /// of the last stage run.
  std::vector<double> history;
  std::string failure;  // why a fallback was taken, empty otherwise

  /// The same alignment expressed in the caller's raw coordinates.
  SimilarityTransform raw_transform() const;
};

/// Pooled mean of the NN distances a->b and b->a after dropping the largest
/// ceil(trim_ratio * n) of each direction. Both clouds are first subsampled to
/// at most sample_cap points.
double trimmed_symmetric_chamfer(const PointCloud& a, const PointCloud& b, double trim_ratio,
                                 std::size_t sample_cap, std::uint64_t rng_seed);

/// Least-squares similarity (or rigid, scale 1) transform mapping src onto dst.
SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale);

IcpResult icp_point_to_point(const PointCloud& source, const PointCloud& target,
                             const SimilarityTransform& init, int max_iter, double threshold,
                             bool estimate_scale, double convergence_epsilon = 1e-7);

/// Tukey biweight (1 - (r/k)^2)^2 inside |r| < k, zero from k outward.
double tukey_weight(double r, double k);
double tukey_rho(double r, double k);

/// Robust point-to-plane ICP by reweighted Gauss-Newton, with an isotropic
/// scale term when `estimate_scale` is set. A normal-free target runs
/// point-to-point at `p2p_fallback_threshold` when given and raises
/// MissingNormals otherwise.
IcpResult icp_point_to_plane_tukey(const PointCloud& source, const PointCloud& target,
                                   const SimilarityTransform& init, int max_iter,
                                   double threshold, double tukey_k,
                                   std::optional<double> p2p_fallback_threshold = std::nullopt,
                                   double convergence_epsilon = 1e-7, bool estimate_scale = false);

struct ValidationFailure {
  std::string reason;
};

/// Projects the rotation onto SO(3) after checking finiteness, reflections,
/// determinant drift (rigid only) and translation magnitude.
std::variant<SimilarityTransform, ValidationFailure> validate_transform(
    const SimilarityTransform& t, bool rigid, double max_translation = 4.0,
    double det_tolerance = 0.01);

struct YawSweepResult {
  SimilarityTransform init;
  double selected_yaw_deg = 0.0;
  std::vector<double> prescores;  // one per candidate, candidate order
  std::size_t seed_runs = 0;
  bool flagged = false;  // every seed ICP failed
};

YawSweepResult yaw_sweep_init(const PointCloud& source, const PointCloud& target,
                              const IcpConfig& config);

/// Full pipeline in the shared-normalized frame. Never throws: failures come
/// back as fallback provenance.
IcpResult robust_icp(const PointCloud& source, const PointCloud& target, const IcpConfig& config);

struct DualAlignment {
  IcpResult result;
  /// Map raw prediction / ground-truth coordinates into the selected branch's
  /// evaluation frame (the robust_icp normalized frame, prediction aligned).
  SimilarityTransform pred_to_eval;
  SimilarityTransform gt_to_eval;
  double fscore_minmax = 0.0;
  double fscore_aabb = 0.0;
  double minmax_prescale = 1.0;
};

/// Maps a cloud with native output range [lo, hi] to [-1, 1].
SimilarityTransform minmax_branch_transform(double lo, double hi);
/// Recenters the cloud's AABB on the origin and scales its longest side to 2.
SimilarityTransform aabb_branch_transform(const PointCloud& cloud);

/// Aligns in both normalization branches and keeps the one with the higher
/// scene F-score at `tau`; ties go to minmax.
DualAlignment dual_normalization_align(const PointCloud& pred_scene, const PointCloud& gt_scene,
                                       const IcpConfig& config, std::pair<double, double> native_range,
                                       double tau = 0.1);

}  // namespace scenebench
