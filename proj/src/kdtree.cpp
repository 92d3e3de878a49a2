#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scenebench/geometry.hpp"

namespace scenebench {
namespace {
constexpr std::uint32_t kLeafSize = 8;

bool before(double d2a, std::size_t ia, double d2b, std::size_t ib) {
  return d2a < d2b || (d2a == d2b && ia < ib);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> reference)
    : points_(reference.begin(), reference.end()) {
  if (points_.empty()) throw Error(ErrorCode::EmptyInput, "kd-tree reference set is empty");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (auto i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search_nearest(std::int32_t id, const Vec3& q, double& best_d2,
                            std::size_t& best_idx) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const auto idx = order_[i];
      const double d2 = squared_distance(q, points_[idx]);
      if (before(d2, idx, best_d2, best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const auto near = diff < 0 ? node.left : node.right;
  const auto far = diff < 0 ? node.right : node.left;
  search_nearest(near, q, best_d2, best_idx);
  if (diff * diff <= best_d2) search_nearest(far, q, best_d2, best_idx);
}

Neighbor KdTree::nearest(const Vec3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_idx = std::numeric_limits<std::size_t>::max();
  search_nearest(0, query, best_d2, best_idx);
  return {best_idx, std::sqrt(best_d2)};
}

void KdTree::search_knn(std::int32_t id, const Vec3& q, std::size_t k,
                        std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = squared_distance(q, points_[idx]);
      if (heap.size() < k) {
        heap.emplace_back(d2, idx);
        std::push_heap(heap.begin(), heap.end());
      } else if (before(d2, idx, heap.front().first, heap.front().second)) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d2, idx};
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const auto near = diff < 0 ? node.left : node.right;
  const auto far = diff < 0 ? node.right : node.left;
  search_knn(near, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().first) search_knn(far, q, k, heap);
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k + 1);
  if (k > 0) search_knn(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const auto& [d2, idx] : heap) out.push_back({idx, std::sqrt(d2)});
  return out;
}

}  // namespace scenebench
