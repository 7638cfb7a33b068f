#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cloud.hpp"

namespace scoopflow {

struct Neighbor {
  std::size_t index;
  double sq_dist;
};

/// Exact Euclidean kd-tree over a fixed point set.
///
/// Results are sorted by (squared distance, index), so equidistant points are
/// reported lowest index first. The index is immutable after construction and
/// safe to query from several threads.
class NeighborIndex {
 public:
  explicit NeighborIndex(std::span<const Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const noexcept { return points_; }

  /// Throws InvalidInput when k is zero or exceeds the point count.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  Neighbor nearest(const Vec3& query) const;

 private:
  struct Node {
    std::size_t begin, end;  // range into order_
    int dim;                 // -1 for leaves
    double split;
    std::size_t left, right;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Vec3& query, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

NeighborIndex build_index(const PointCloud& cloud);

/// Per-point neighbor lists of size k taken from the cloud with the point
/// itself excluded. Row-major, n * k entries.
struct NeighborGraph {
  std::size_t k = 0;
  std::vector<std::size_t> neighbors;

  std::span<const std::size_t> row(std::size_t i) const {
    return {neighbors.data() + i * k, k};
  }
  std::size_t rows() const { return k == 0 ? 0 : neighbors.size() / k; }
};

/// Throws InvalidInput unless 1 <= k < n.
NeighborGraph self_excluded_neighbors(const PointCloud& cloud, std::size_t k);

}  // namespace scoopflow
