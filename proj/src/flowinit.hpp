#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cloud.hpp"
#include "features.hpp"
#include "transport.hpp"

namespace scoopflow {

struct CorrespondenceConfig {
  std::size_t k_s = 64;  // target candidates kept per source point
};

/// Per source row, the k highest-mass targets and their softmax weights.
struct TopK {
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // n_s * k, row-major
  std::vector<double> weights;       // n_s * k, rows sum to 1

  std::size_t rows() const { return k == 0 ? 0 : indices.size() / k; }
  std::span<const std::size_t> index_row(std::size_t i) const { return {indices.data() + i * k, k}; }
  std::span<const double> weight_row(std::size_t i) const { return {weights.data() + i * k, k}; }
};

/// Throws InvalidInput when k_s is zero or exceeds the target count.
TopK top_k_weights(const TransportPlan& plan, const CorrespondenceConfig& cfg);

std::vector<Vec3> soft_correspondence(const PointCloud& y, const TopK& selection);

FlowField initial_flow(const PointCloud& x, std::span<const Vec3> soft_targets);

/// max(0, weighted similarity over the selected targets); 0 for fully gated rows.
std::vector<double> confidence(const CostMatrix& cost, const TopK& selection);

struct CorrespondenceResult {
  TopK selection;
  std::vector<Vec3> soft_targets;
  std::vector<double> confidence;
  FlowField initial_flow;
};

CorrespondenceResult correspond(const PointCloud& x, const PointCloud& y, const CostMatrix& cost,
                                const TransportPlan& plan, const CorrespondenceConfig& cfg);

}  // namespace scoopflow
