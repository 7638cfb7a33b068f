#include "objective.hpp"

#include <cmath>

#include "error.hpp"

namespace scoopflow {

double nn_distance_loss(std::span<const Vec3> soft_targets, const NeighborIndex& target) {
  if (soft_targets.empty()) fail(ErrorCode::InvalidInput, "nn_distance_loss: no points");
  double sum = 0.0;
  for (const auto& q : soft_targets) sum += target.nearest(q).sq_dist;
  return sum / static_cast<double>(soft_targets.size());
}

double confidence_distance_loss(std::span<const Vec3> soft_targets, std::span<const double> confidence,
                                const NeighborIndex& target) {
  if (soft_targets.empty()) fail(ErrorCode::InvalidInput, "confidence_distance_loss: no points");
  if (confidence.size() != soft_targets.size()) fail(ErrorCode::ShapeMismatch, "confidence_distance_loss: confidence length");
  double sum = 0.0;
  for (std::size_t i = 0; i < soft_targets.size(); ++i) {
    sum += confidence[i] * target.nearest(soft_targets[i]).sq_dist;
  }
  return sum / static_cast<double>(soft_targets.size());
}

double confidence_loss(std::span<const double> confidence) {
  if (confidence.empty()) fail(ErrorCode::InvalidInput, "confidence_loss: no points");
  double sum = 0.0;
  for (double p : confidence) sum += 1.0 - p;
  return sum / static_cast<double>(confidence.size());
}

double smoothness_loss(const FlowField& flow, const NeighborGraph& neighbors) {
  if (neighbors.rows() != flow.size()) fail(ErrorCode::ShapeMismatch, "smoothness_loss: neighbor graph size");
  double sum = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    for (auto l : neighbors.row(i)) sum += (flow[i] - flow[l]).cwiseAbs().sum();
  }
  return sum / (static_cast<double>(flow.size()) * static_cast<double>(neighbors.k));
}

double smoothness_loss(const FlowField& flow, const PointCloud& source, std::size_t k_f) {
  check_flow(flow, source.size(), "smoothness_loss");
  return smoothness_loss(flow, self_excluded_neighbors(source, k_f));
}

double chamfer_loss(std::span<const Vec3> warped, std::span<const Vec3> target) {
  if (warped.empty() || target.empty()) fail(ErrorCode::InvalidInput, "chamfer_loss: empty point set");
  const NeighborIndex to_target(target), to_warped(warped);
  return nn_distance_loss(warped, to_target) + nn_distance_loss(target, to_warped);
}

LossReport total_loss(const LossParts& parts, const LossConfig& cfg) {
  return {parts.dist, parts.conf, parts.flow_smooth,
          parts.dist + cfg.alpha_conf * parts.conf + cfg.alpha_flow * parts.flow_smooth};
}

LossReport evaluate_losses(const PointCloud& x, const FlowField& flow, std::span<const double> confidence,
                           const PointCloud& y, const NeighborIndex& target_index,
                           const NeighborGraph& source_neighbors, const LossConfig& cfg) {
  const PointCloud moved = x.warped(flow);
  LossParts parts;
  parts.dist = cfg.distance_mode == DistanceMode::Chamfer
                   ? chamfer_loss(moved.points(), y.points())
                   : confidence_distance_loss(moved.points(), confidence, target_index);
  parts.conf = confidence_loss(confidence);
  parts.flow_smooth = smoothness_loss(flow, source_neighbors);
  return total_loss(parts, cfg);
}

}  // namespace scoopflow
