#include "cloud.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace scoopflow {

bool all_finite(std::span<const Vec3> values) {
  for (const auto& v : values) {
    if (!v.allFinite()) return false;
  }
  return true;
}

void check_flow(const FlowField& flow, std::size_t expected, const char* what) {
  if (flow.size() != expected) {
    fail(ErrorCode::ShapeMismatch,
         std::string(what) + ": expected " + std::to_string(expected) +
             " flow vectors, got " + std::to_string(flow.size()));
  }
  if (!all_finite(flow)) {
    fail(ErrorCode::InvalidInput, std::string(what) + ": non-finite flow component");
  }
}

PointCloud::PointCloud(std::vector<Vec3> points, std::optional<FlowField> gt_flow)
    : points_(std::move(points)) {
  if (points_.empty()) fail(ErrorCode::InvalidInput, "point cloud is empty");
  if (!all_finite(points_)) fail(ErrorCode::InvalidInput, "point cloud has non-finite coordinates");
  if (gt_flow) set_flow(std::move(*gt_flow));
}

const FlowField& PointCloud::flow() const {
  if (!gt_flow_) fail(ErrorCode::InvalidInput, "point cloud carries no ground-truth flow");
  return *gt_flow_;
}

void PointCloud::set_flow(FlowField flow) {
  check_flow(flow, points_.size(), "ground-truth flow");
  gt_flow_ = std::move(flow);
}

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points_) sum += p;
  return sum / static_cast<double>(points_.size());
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<Vec3> pts;
  pts.reserve(indices.size());
  for (auto i : indices) pts.push_back(points_.at(i));
  std::optional<FlowField> flow;
  if (gt_flow_) {
    flow.emplace();
    flow->reserve(indices.size());
    for (auto i : indices) flow->push_back((*gt_flow_)[i]);
  }
  return PointCloud(std::move(pts), std::move(flow));
}

PointCloud PointCloud::warped(const FlowField& flow) const {
  check_flow(flow, points_.size(), "warp");
  std::vector<Vec3> pts(points_.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = points_[i] + flow[i];
  return PointCloud(std::move(pts));
}

}  // namespace scoopflow
