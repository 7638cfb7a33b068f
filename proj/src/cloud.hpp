#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace scoopflow {

using Vec3 = Eigen::Vector3d;

/// One translation vector per source point, in meters.
using FlowField = std::vector<Vec3>;

/// Ordered, non-empty set of finite 3D points with an optional ground-truth
/// flow channel aligned with the points.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points,
                      std::optional<FlowField> gt_flow = std::nullopt);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const std::vector<Vec3>& points() const noexcept { return points_; }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }

  bool has_flow() const noexcept { return gt_flow_.has_value(); }
  const FlowField& flow() const;
  void set_flow(FlowField flow);
  void clear_flow() noexcept { gt_flow_.reset(); }

  Vec3 centroid() const;

  /// Points (and flow, if present) at the given indices; repeats allowed.
  PointCloud subset(std::span<const std::size_t> indices) const;

  /// Each point moved by its flow vector. Drops the ground-truth channel.
  PointCloud warped(const FlowField& flow) const;

 private:
  std::vector<Vec3> points_;
  std::optional<FlowField> gt_flow_;
};

bool all_finite(std::span<const Vec3> values);

/// Throws ShapeMismatch when the flow length differs from `expected`, and
/// InvalidInput on non-finite components.
void check_flow(const FlowField& flow, std::size_t expected, const char* what);

}  // namespace scoopflow
