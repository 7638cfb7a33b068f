#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cloud.hpp"
#include "kdtree.hpp"

namespace scoopflow {

enum class DistanceMode {
  NearestNeighbor,  // confidence-weighted one-sided nearest-target distance
  Chamfer,          // bidirectional Chamfer distance, for occlusion-free data
};

struct LossConfig {
  double alpha_conf = 0.1;
  double alpha_flow = 10.0;
  std::size_t k_f = 32;
  double smoothness_delta = 1e-9;
  DistanceMode distance_mode = DistanceMode::NearestNeighbor;
};

struct LossReport {
  double dist = 0.0;
  double conf = 0.0;
  double flow_smooth = 0.0;
  double total = 0.0;
};

/// Mean squared distance from each point to its nearest target.
double nn_distance_loss(std::span<const Vec3> soft_targets, const NeighborIndex& target);

/// Mean of p_i times the squared nearest-target distance.
double confidence_distance_loss(std::span<const Vec3> soft_targets, std::span<const double> confidence,
                                const NeighborIndex& target);

/// Mean of (1 - p_i).
double confidence_loss(std::span<const double> confidence);

/// Mean L1 difference between each flow vector and those of its k_f
/// neighbors, divided by n * k_f.
double smoothness_loss(const FlowField& flow, const NeighborGraph& neighbors);
double smoothness_loss(const FlowField& flow, const PointCloud& source, std::size_t k_f);

/// Mean squared NN distance in both directions, summed.
double chamfer_loss(std::span<const Vec3> warped, std::span<const Vec3> target);

struct LossParts {
  double dist = 0.0;
  double conf = 0.0;
  double flow_smooth = 0.0;
};

LossReport total_loss(const LossParts& parts, const LossConfig& cfg);

/// All terms for source `x` displaced by `flow` against target `y`. The
/// distance term follows cfg.distance_mode.
LossReport evaluate_losses(const PointCloud& x, const FlowField& flow, std::span<const double> confidence,
                           const PointCloud& y, const NeighborIndex& target_index,
                           const NeighborGraph& source_neighbors, const LossConfig& cfg);

}  // namespace scoopflow
