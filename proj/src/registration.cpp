#include "scenebench/registration.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "scenebench/metrics.hpp"
#include "scenebench/random.hpp"

namespace scenebench {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// rotation (3), translation (3), log-scale (1)
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

void require_nonempty(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "registration needs two non-empty clouds");
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(ErrorCode::DomainError, std::string(what) + " must be positive and finite");
}

// One pass of nearest-neighbour matching under a transform.
struct Matches {
  std::size_t inliers = 0;
  double inlier_sq = 0.0;      // sum of squared inlier distances
  double truncated_sq = 0.0;   // sum of min(d^2, th^2) over all source points
  std::vector<std::size_t> src_idx;
  std::vector<std::size_t> dst_idx;

  double truncated_rmse(std::size_t n) const { return std::sqrt(truncated_sq / static_cast<double>(n)); }
  double rmse() const { return inliers ? std::sqrt(inlier_sq / static_cast<double>(inliers)) : 0.0; }
};

Matches match(const PointCloud& source, const PointCloud& target, const KdTree& tree,
              const SimilarityTransform& t, double threshold, bool keep_pairs) {
  Matches m;
  const double th2 = threshold * threshold;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 q = t.apply(source.points[i]);
    const std::size_t j = tree.nearest(q).index;
    const double d2 = squared_distance(q, target.points[j]);
    if (d2 <= th2) {
      ++m.inliers;
      m.inlier_sq += d2;
      m.truncated_sq += d2;
      if (keep_pairs) {
        m.src_idx.push_back(i);
        m.dst_idx.push_back(j);
      }
    } else {
      m.truncated_sq += th2;
    }
  }
  return m;
}

// Rotation of angle |w| about w.
Mat3 exp_so3(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

SimilarityTransform apply_increment(const SimilarityTransform& t, const Vec7& delta) {
  const Mat3 dr = exp_so3(delta.head<3>());
  const double ds = std::exp(delta[6]);
  SimilarityTransform out;
  out.rotation = dr * t.rotation;
  out.translation = ds * (dr * t.translation) + delta.segment<3>(3);
  out.scale = ds * t.scale;
  return out;
}

// Minimum-norm solution of h x = g; directions the data do not constrain
// (sliding along a plane, a fixed scale) stay at zero.
Vec7 pseudo_solve(const Mat7& h, const Vec7& g) {
  Eigen::SelfAdjointEigenSolver<Mat7> es(h);
  const auto& ev = es.eigenvalues();
  const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 0.0) * 1e-10;
  Vec7 out = Vec7::Zero();
  for (int i = 0; i < 7; ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) {
      const auto v = es.eigenvectors().col(i);
      out += v * (v.dot(g) / ev[i]);
    }
  }
  return out;
}

// Point-to-plane objective: Tukey rho on plane residuals of matched points,
// k^2/6 for source points without a match.
struct PlaneMatches {
  std::size_t inliers = 0;
  double inlier_sq = 0.0;
  double rho_sum = 0.0;
  std::vector<Vec3> moved;
  std::vector<Vec3> normal;
  std::vector<double> residual;

  // Comparable to an rmse: sqrt(2 * mean rho), which tends to the residual
  // rmse for small residuals.
  double recorded(std::size_t n) const { return std::sqrt(2.0 * rho_sum / static_cast<double>(n)); }
  double rmse() const { return inliers ? std::sqrt(inlier_sq / static_cast<double>(inliers)) : 0.0; }
};

PlaneMatches plane_match(const PointCloud& source, const PointCloud& target, const KdTree& tree,
                         const SimilarityTransform& t, double threshold, double k) {
  PlaneMatches m;
  const double th2 = threshold * threshold;
  const double cap = k * k / 6.0;
  for (const auto& p : source.points) {
    const Vec3 q = t.apply(p);
    const std::size_t j = tree.nearest(q).index;
    const double d2 = squared_distance(q, target.points[j]);
    if (d2 <= th2) {
      const double r = target.normals[j].dot(q - target.points[j]);
      ++m.inliers;
      m.inlier_sq += d2;
      m.rho_sum += tukey_rho(r, k);
      m.moved.push_back(q);
      m.normal.push_back(target.normals[j]);
      m.residual.push_back(r);
    } else {
      m.rho_sum += cap;
    }
  }
  return m;
}

Vec3 centroid(const PointCloud& c) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : c.points) sum += p;
  return sum / static_cast<double>(c.size());
}

double mean_sq_radius(const PointCloud& c, const Vec3& mu) {
  double sum = 0.0;
  for (const auto& p : c.points) sum += squared_distance(p, mu);
  return sum / static_cast<double>(c.size());
}

PointCloud strip_normals(const PointCloud& c) {
  PointCloud out(c.points, c.space);
  return out;
}

}  // namespace

std::string_view provenance_name(StageProvenance p) {
  switch (p) {
    case StageProvenance::fine: return "fine";
    case StageProvenance::coarse_fallback: return "coarse_fallback";
    case StageProvenance::identity_fallback: return "identity_fallback";
  }
  return "unknown";
}

std::string_view branch_name(NormalizationBranch b) {
  return b == NormalizationBranch::minmax ? "minmax" : "aabb_recentered";
}

void IcpConfig::validate() const {
  if (up_axis < 0 || up_axis > 2) throw Error(ErrorCode::DomainError, "up_axis must be 0, 1 or 2");
  if (yaw_candidates_deg.empty()) throw Error(ErrorCode::DomainError, "no yaw candidates");
  if (!(trim_ratio > 0.0 && trim_ratio < 1.0)) throw Error(ErrorCode::DomainError, "trim_ratio must lie in (0, 1)");
  if (prescore_sample_cap == 0) throw Error(ErrorCode::DomainError, "prescore_sample_cap must be positive");
  if (keep_top_yaw == 0 || keep_top_yaw > yaw_candidates_deg.size())
    throw Error(ErrorCode::DomainError, "keep_top_yaw must lie in [1, #yaw candidates]");
  require_positive(voxel_size, "voxel_size");
  require_positive(tukey_k_factor, "tukey_k_factor");
  require_positive(coarse_threshold_factor, "coarse_threshold_factor");
  require_positive(fine_p2l_threshold_factor, "fine_p2l_threshold_factor");
  require_positive(fine_p2p_threshold_factor, "fine_p2p_threshold_factor");
  require_positive(selection_lambda_factor, "selection_lambda_factor");
  require_positive(max_translation, "max_translation");
  require_positive(rigid_det_tolerance, "rigid_det_tolerance");
  if (total_iterations < 1 || seed_iterations < 1) throw Error(ErrorCode::DomainError, "iteration counts must be positive");
  if (normal_k < 3) throw Error(ErrorCode::DomainError, "normal_k must be at least 3");
  if (!(convergence_epsilon >= 0.0)) throw Error(ErrorCode::DomainError, "convergence_epsilon must be non-negative");
}

std::pair<int, int> iteration_split(int total) {
  const int coarse = std::max(10, total / 2);
  return {coarse, std::max(10, total - coarse)};
}

SimilarityTransform Normalization::forward() const {
  SimilarityTransform t;
  t.scale = 1.0 / sigma;
  t.translation = -center / sigma;
  return t;
}

SimilarityTransform IcpResult::raw_transform() const {
  const SimilarityTransform n = normalization.forward();
  return n.inverse() * transform * n;
}

double trimmed_symmetric_chamfer(const PointCloud& a, const PointCloud& b, double trim_ratio,
                                 std::size_t sample_cap, std::uint64_t rng_seed) {
  require_nonempty(a, b);
  if (!(trim_ratio >= 0.0 && trim_ratio < 1.0)) throw Error(ErrorCode::DomainError, "trim_ratio must lie in [0, 1)");
  if (sample_cap == 0) throw Error(ErrorCode::DomainError, "sample_cap must be positive");

  Rng rng(rng_seed);
  const auto subsample = [&](const PointCloud& c) {
    if (c.size() <= sample_cap) return c.points;
    std::vector<Vec3> out;
    out.reserve(sample_cap);
    for (auto i : rng.sample_indices(c.size(), sample_cap)) out.push_back(c.points[i]);
    return out;
  };
  const std::vector<Vec3> sa = subsample(a);
  const std::vector<Vec3> sb = subsample(b);

  double sum = 0.0;
  std::size_t kept_total = 0;
  const auto direction = [&](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    KdTree tree(to);
    std::vector<double> d(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) d[i] = tree.nearest(from[i]).distance;
    std::sort(d.begin(), d.end());
    const auto drop = static_cast<std::size_t>(std::ceil(trim_ratio * static_cast<double>(d.size())));
    const std::size_t keep = std::max<std::size_t>(1, d.size() - std::min(drop, d.size()));
    for (std::size_t i = 0; i < keep; ++i) sum += d[i];
    kept_total += keep;
  };
  direction(sa, sb);
  direction(sb, sa);
  return sum / static_cast<double>(kept_total);
}

SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale) {
  if (src.empty() || src.size() != dst.size())
    throw Error(ErrorCode::ShapeError, "umeyama needs equally sized, non-empty point sets");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_s;
    cov += (dst[i] - mu_d) * a.transpose();
    var_s += a.squaredNorm();
  }
  cov /= n;
  var_s /= n;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s[2] = -1.0;
  SimilarityTransform out;
  out.rotation = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  if (with_scale) {
    const double trace = svd.singularValues().dot(s);
    // coincident or fully degenerate source: keep unit scale
    if (var_s > 0.0 && trace > 0.0) out.scale = trace / var_s;
  }
  out.translation = mu_d - out.scale * (out.rotation * mu_s);
  return out;
}

IcpResult icp_point_to_point(const PointCloud& source, const PointCloud& target,
                             const SimilarityTransform& init, int max_iter, double threshold,
                             bool estimate_scale, double convergence_epsilon) {
  require_nonempty(source, target);
  require_positive(threshold, "threshold");
  if (max_iter < 0) throw Error(ErrorCode::DomainError, "max_iter must be non-negative");

  const KdTree tree(target.points);
  const std::size_t n = source.size();
  SimilarityTransform current = init;
  Matches m = match(source, target, tree, current, threshold, true);
  if (m.inliers == 0) throw Error(ErrorCode::NoOverlap, "no correspondences within threshold");

  IcpResult result;
  double objective = m.truncated_rmse(n);
  result.history.push_back(objective);
  std::vector<Vec3> src, dst;
  for (int it = 0; it < max_iter; ++it) {
    src.clear();
    dst.clear();
    for (std::size_t k = 0; k < m.src_idx.size(); ++k) {
      const Vec3& p = source.points[m.src_idx[k]];
      src.push_back(estimate_scale ? p : Vec3(current.scale * p));
      dst.push_back(target.points[m.dst_idx[k]]);
    }
    SimilarityTransform next = umeyama(src, dst, estimate_scale);
    if (!estimate_scale) next.scale = current.scale;

    Matches candidate = match(source, target, tree, next, threshold, true);
    if (candidate.inliers == 0) break;
    const double value = candidate.truncated_rmse(n);
    if (value > objective) break;  // keeps the recorded rmse monotone
    current = next;
    m = std::move(candidate);
    ++result.iterations;
    result.history.push_back(value);
    const bool converged = objective - value < convergence_epsilon;
    objective = value;
    if (converged) break;
  }

  result.transform = current;
  result.fitness = static_cast<double>(m.inliers) / static_cast<double>(n);
  result.rmse = m.rmse();
  result.provenance = StageProvenance::fine;
  return result;
}

double tukey_weight(double r, double k) {
  if (std::abs(r) >= k) return 0.0;
  const double u = 1.0 - (r / k) * (r / k);
  return u * u;
}

double tukey_rho(double r, double k) {
  const double cap = k * k / 6.0;
  if (std::abs(r) >= k) return cap;
  const double u = 1.0 - (r / k) * (r / k);
  return cap * (1.0 - u * u * u);
}

IcpResult icp_point_to_plane_tukey(const PointCloud& source, const PointCloud& target,
                                   const SimilarityTransform& init, int max_iter,
                                   double threshold, double tukey_k,
                                   std::optional<double> p2p_fallback_threshold,
                                   double convergence_epsilon, bool estimate_scale) {
  require_nonempty(source, target);
  if (!target.has_normals()) {
    if (!p2p_fallback_threshold)
      throw Error(ErrorCode::MissingNormals, "point-to-plane ICP needs target normals");
    return icp_point_to_point(source, target, init, max_iter, *p2p_fallback_threshold, estimate_scale,
                              convergence_epsilon);
  }
  require_positive(threshold, "threshold");
  require_positive(tukey_k, "tukey_k");
  if (max_iter < 0) throw Error(ErrorCode::DomainError, "max_iter must be non-negative");

  const KdTree tree(target.points);
  const std::size_t n = source.size();
  SimilarityTransform current = init;
  PlaneMatches m = plane_match(source, target, tree, current, threshold, tukey_k);
  if (m.inliers == 0) throw Error(ErrorCode::NoOverlap, "no correspondences within threshold");

  IcpResult result;
  double objective = m.recorded(n);
  result.history.push_back(objective);
  for (int it = 0; it < max_iter; ++it) {
    Mat7 h = Mat7::Zero();
    Vec7 g = Vec7::Zero();
    for (std::size_t i = 0; i < m.moved.size(); ++i) {
      const double w = tukey_weight(m.residual[i], tukey_k);
      if (w == 0.0) continue;
      Vec7 j;
      j.head<3>() = m.moved[i].cross(m.normal[i]);
      j.segment<3>(3) = m.normal[i];
      j[6] = estimate_scale ? m.normal[i].dot(m.moved[i]) : 0.0;
      h.noalias() += w * j * j.transpose();
      g.noalias() += w * m.residual[i] * j;
    }
    const Vec7 delta = -pseudo_solve(h, g);
    if (!delta.allFinite() || delta.isZero(0.0)) break;

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving < 12 && !accepted; ++halving, step *= 0.5) {
      const SimilarityTransform next = apply_increment(current, step * delta);
      PlaneMatches candidate = plane_match(source, target, tree, next, threshold, tukey_k);
      if (candidate.inliers == 0) continue;
      const double value = candidate.recorded(n);
      if (value > objective) continue;
      current = next;
      m = std::move(candidate);
      accepted = true;
    }
    if (!accepted) break;
    const double value = m.recorded(n);
    ++result.iterations;
    result.history.push_back(value);
    const bool converged = objective - value < convergence_epsilon;
    objective = value;
    if (converged) break;
  }

  result.transform = current;
  result.fitness = static_cast<double>(m.inliers) / static_cast<double>(n);
  result.rmse = m.rmse();
  result.provenance = StageProvenance::fine;
  return result;
}

std::variant<SimilarityTransform, ValidationFailure> validate_transform(
    const SimilarityTransform& t, bool rigid, double max_translation, double det_tolerance) {
  if (!t.is_finite()) return ValidationFailure{"non-finite entries"};
  const double det = t.rotation.determinant();
  if (det <= 0.0) return ValidationFailure{"reflection (det " + std::to_string(det) + ")"};
  if (rigid && std::abs(det - 1.0) > det_tolerance)
    return ValidationFailure{"determinant " + std::to_string(det) + " too far from 1"};
  if (!(t.scale > 0.0)) return ValidationFailure{"non-positive scale"};
  if (t.translation.norm() > max_translation)
    return ValidationFailure{"translation magnitude " + std::to_string(t.translation.norm()) + " exceeds " +
                             std::to_string(max_translation)};
  SimilarityTransform out = t;
  out.rotation = project_to_so3(t.rotation);
  return out;
}

YawSweepResult yaw_sweep_init(const PointCloud& source, const PointCloud& target,
                              const IcpConfig& config) {
  config.validate();
  require_nonempty(source, target);

  const Vec3 mu_s = centroid(source);
  const Vec3 mu_t = centroid(target);
  double s0 = 1.0;
  if (config.center_init && config.estimate_scale) {
    const double vs = mean_sq_radius(source, mu_s);
    const double vt = mean_sq_radius(target, mu_t);
    if (vs > 0.0 && vt > 0.0) s0 = std::sqrt(vt / vs);
  }

  const std::size_t count = config.yaw_candidates_deg.size();
  std::vector<SimilarityTransform> candidates(count);
  YawSweepResult out;
  out.prescores.resize(count);
  for (std::size_t c = 0; c < count; ++c) {
    SimilarityTransform& t = candidates[c];
    t.rotation = axis_rotation(config.up_axis, config.yaw_candidates_deg[c] * kDegToRad);
    if (config.center_init) {
      t.scale = s0;
      t.translation = mu_t - s0 * (t.rotation * mu_s);
    }
    out.prescores[c] = trimmed_symmetric_chamfer(transform_cloud(source, t), target, config.trim_ratio,
                                                 config.prescore_sample_cap, config.rng_seed);
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.prescores[a] < out.prescores[b]; });

  double best_score = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < config.keep_top_yaw; ++r) {
    const std::size_t c = order[r];
    ++out.seed_runs;
    try {
      const IcpResult seed = icp_point_to_point(source, target, candidates[c], config.seed_iterations,
                                                config.coarse_threshold(), config.estimate_scale,
                                                config.convergence_epsilon);
      const double score = seed.rmse + config.selection_lambda() * (1.0 - seed.fitness);
      if (score < best_score) {
        best_score = score;
        best = c;
        out.init = seed.transform;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
    }
  }
  if (!best) {
    out.flagged = true;
    best = order[0];
    out.init = candidates[*best];
  }
  out.selected_yaw_deg = config.yaw_candidates_deg[*best];
  return out;
}

IcpResult robust_icp(const PointCloud& source, const PointCloud& target, const IcpConfig& config) {
  IcpResult out;
  out.transform = SimilarityTransform::identity();
  out.provenance = StageProvenance::identity_fallback;

  std::optional<SharedNormalization> sn;
  std::optional<PointCloud> fine_target;
  try {
    config.validate();
    require_nonempty(source, target);
    source.validate();
    target.validate();
    sn = shared_normalize(strip_normals(source), strip_normals(target));
    out.normalization = {sn->center, sn->sigma};

    const Vec3 origin = Aabb::from_points(sn->source.points).merged(Aabb::from_points(sn->target.points)).min;
    const PointCloud src_down = voxel_downsample(sn->source, config.voxel_size, origin);
    const PointCloud tgt_down = voxel_downsample(sn->target, config.voxel_size, origin);

    SimilarityTransform t0 = config.init_override ? *config.init_override
                                                  : yaw_sweep_init(src_down, tgt_down, config).init;

    const auto [t_coarse, t_fine] = iteration_split(config.total_iterations);
    std::optional<SimilarityTransform> coarse;
    try {
      coarse = icp_point_to_point(src_down, tgt_down, t0, t_coarse, config.coarse_threshold(),
                                  config.estimate_scale, config.convergence_epsilon)
                   .transform;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
      out.failure = "coarse stage: no overlap";
    }

    fine_target = sn->target;
    if (fine_target->size() > config.normal_k) fine_target = estimate_normals(*fine_target, config.normal_k);

    const SimilarityTransform base = coarse.value_or(t0);
    std::optional<IcpResult> fine;
    try {
      if (config.estimate_scale) {
        fine = icp_point_to_plane_tukey(transform_cloud(sn->source, base), *fine_target,
                                        SimilarityTransform::identity(), t_fine, config.fine_p2l_threshold(),
                                        config.tukey_k(), config.fine_p2p_threshold(), config.convergence_epsilon,
                                        true);
        fine->transform = fine->transform * base;
      } else {
        fine = icp_point_to_plane_tukey(sn->source, *fine_target, base, t_fine, config.fine_p2l_threshold(),
                                        config.tukey_k(), config.fine_p2p_threshold(), config.convergence_epsilon);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoOverlap) throw;
      out.failure += (out.failure.empty() ? "" : "; ") + std::string("fine stage: no overlap");
    }

    const bool rigid = !config.estimate_scale;
    if (fine) {
      auto v = validate_transform(fine->transform, rigid, config.max_translation, config.rigid_det_tolerance);
      if (auto* ok = std::get_if<SimilarityTransform>(&v)) {
        const Normalization norm = out.normalization;
        out = std::move(*fine);
        out.normalization = norm;
        out.transform = *ok;
        out.provenance = StageProvenance::fine;
        out.failure.clear();
        return out;
      }
      out.failure = "fine result rejected: " + std::get<ValidationFailure>(v).reason;
    }
    if (coarse) {
      auto v = validate_transform(*coarse, rigid, config.max_translation, config.rigid_det_tolerance);
      if (auto* ok = std::get_if<SimilarityTransform>(&v)) {
        out.transform = *ok;
        out.provenance = StageProvenance::coarse_fallback;
      } else {
        out.failure += "; coarse result rejected: " + std::get<ValidationFailure>(v).reason;
      }
    }
  } catch (const std::exception& e) {
    out.failure = e.what();
  }

  if (out.provenance == StageProvenance::identity_fallback) out.transform = SimilarityTransform::identity();
  out.history.clear();
  out.iterations = 0;
  // score the fallback on the full-resolution pair at the fine threshold
  if (sn && fine_target) {
    const double th = fine_target->has_normals() ? config.fine_p2l_threshold() : config.fine_p2p_threshold();
    const KdTree tree(fine_target->points);
    const Matches m = match(sn->source, *fine_target, tree, out.transform, th, false);
    out.fitness = static_cast<double>(m.inliers) / static_cast<double>(sn->source.size());
    out.rmse = m.rmse();
  }
  return out;
}

SimilarityTransform minmax_branch_transform(double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::DomainError, "native range needs finite lo < hi");
  SimilarityTransform t;
  t.scale = 2.0 / (hi - lo);
  t.translation = Vec3::Constant(-0.5 * (lo + hi) * t.scale);
  return t;
}

SimilarityTransform aabb_branch_transform(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "cannot normalize an empty cloud");
  const Aabb box = Aabb::from_points(cloud.points);
  const double side = box.max_side();
  SimilarityTransform t;
  t.scale = side > 0.0 ? 2.0 / side : 1.0;
  t.translation = -t.scale * box.center();
  return t;
}

DualAlignment dual_normalization_align(const PointCloud& pred_scene, const PointCloud& gt_scene,
                                       const IcpConfig& config, std::pair<double, double> native_range,
                                       double tau) {
  require_nonempty(pred_scene, gt_scene);
  struct Branch {
    IcpResult result;
    SimilarityTransform pred_to_eval, gt_to_eval;
    double fscore = 0.0;
  };
  const auto run = [&](const SimilarityTransform& bp, const SimilarityTransform& bg, NormalizationBranch tag) {
    Branch b;
    b.result = robust_icp(transform_cloud(pred_scene, bp), transform_cloud(gt_scene, bg), config);
    b.result.selected_branch = tag;
    const SimilarityTransform n = b.result.normalization.forward();
    b.pred_to_eval = b.result.transform * n * bp;
    b.gt_to_eval = n * bg;
    PointCloud p = transform_cloud(pred_scene, b.pred_to_eval);
    PointCloud g = transform_cloud(gt_scene, b.gt_to_eval);
    p.space = g.space = SpaceTag::shared_normalized;
    b.fscore = f_score(p, g, tau);
    return b;
  };

  const SimilarityTransform mm = minmax_branch_transform(native_range.first, native_range.second);
  Branch minmax = run(mm, mm, NormalizationBranch::minmax);
  Branch aabb = run(aabb_branch_transform(pred_scene), aabb_branch_transform(gt_scene),
                    NormalizationBranch::aabb_recentered);

  DualAlignment out;
  out.fscore_minmax = minmax.fscore;
  out.fscore_aabb = aabb.fscore;
  out.minmax_prescale = mm.scale;
  Branch& pick = aabb.fscore > minmax.fscore ? aabb : minmax;
  out.result = std::move(pick.result);
  out.pred_to_eval = pick.pred_to_eval;
  out.gt_to_eval = pick.gt_to_eval;
  return out;
}

}  // namespace scenebench
