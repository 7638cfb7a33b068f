#include "kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "error.hpp"

namespace scoopflow {

namespace {

constexpr std::size_t kLeafSize = 8;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
}

}  // namespace

NeighborIndex::NeighborIndex(std::span<const Vec3> points)
    : points_(points.begin(), points.end()), order_(points.size()) {
  if (points_.empty()) fail(ErrorCode::InvalidInput, "cannot index an empty point set");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, points_.size());
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  if (hi[dim] == lo[dim]) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_[a][dim] < points_[b][dim]; });
  const double split = points_[order_[mid]][dim];

  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].dim = dim;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NeighborIndex::search(std::size_t node_id, const Vec3& query, std::size_t k,
                           std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const Neighbor cand{idx, (points_[idx] - query).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = query[node.dim] - node.split;
  const std::size_t near_side = diff < 0 ? node.left : node.right;
  const std::size_t far_side = diff < 0 ? node.right : node.left;
  search(near_side, query, k, heap);
  // Equality still descends so that lower-index ties are found.
  if (heap.size() < k || diff * diff <= heap.front().sq_dist) {
    search(far_side, query, k, heap);
  }
}

std::vector<Neighbor> NeighborIndex::knn(const Vec3& query, std::size_t k) const {
  if (k == 0 || k > points_.size()) {
    fail(ErrorCode::InvalidInput, "knn: k=" + std::to_string(k) + " outside [1, " +
                                      std::to_string(points_.size()) + "]");
  }
  std::vector<Neighbor> heap;
  heap.reserve(k);
  search(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

Neighbor NeighborIndex::nearest(const Vec3& query) const {
  return knn(query, 1).front();
}

NeighborIndex build_index(const PointCloud& cloud) {
  return NeighborIndex(cloud.points());
}

NeighborGraph self_excluded_neighbors(const PointCloud& cloud, std::size_t k) {
  const std::size_t n = cloud.size();
  if (k == 0 || k >= n) {
    fail(ErrorCode::InvalidInput, "neighborhood size " + std::to_string(k) +
                                      " must satisfy 1 <= k < n=" + std::to_string(n));
  }
  const NeighborIndex index(cloud.points());
  NeighborGraph graph{k, std::vector<std::size_t>(n * k)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto found = index.knn(cloud[i], k + 1);
    std::size_t out = 0;
    for (const auto& nb : found) {
      if (nb.index == i || out == k) continue;
      graph.neighbors[i * k + out++] = nb.index;
    }
  }
  return graph;
}

}  // namespace scoopflow
