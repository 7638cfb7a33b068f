#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cloud.hpp"
#include "kdtree.hpp"
#include "objective.hpp"

namespace scoopflow {

struct RefineConfig {
  double lambda_flow = 1.0;
  std::size_t k_f = 32;
  std::size_t steps = 150;
  double update_rate = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double smoothness_delta = 1e-9;
  DistanceMode distance_mode = DistanceMode::NearestNeighbor;

  void validate() const;
};

enum class L1Mode {
  Exact,     // |t|
  Smoothed,  // sqrt(t^2 + delta^2), the form the gradient differentiates
};

/// Residual refinement objective at residual R:
///
///   (1/n) sum_i p_i min_j |x_i + f_i + r_i - y_j|^2
///     + lambda_flow / (n k_f) sum_i sum_{l in N(i)} |(f_i + r_i) - (f_l + r_l)|_1
///
/// In Chamfer mode the first term is the bidirectional Chamfer distance
/// between x + F + R and the target, without confidence weights.
double refine_objective(const PointCloud& x, const FlowField& flow, const FlowField& residual,
                        std::span<const double> confidence, const NeighborIndex& target,
                        const NeighborGraph& neighbors, const RefineConfig& cfg,
                        L1Mode l1 = L1Mode::Exact);

/// Analytic gradient of the smoothed objective with respect to R. Nearest
/// target assignments are recomputed on each call and held constant.
FlowField refine_gradient(const PointCloud& x, const FlowField& flow, const FlowField& residual,
                          std::span<const double> confidence, const NeighborIndex& target,
                          const NeighborGraph& neighbors, const RefineConfig& cfg);

struct RefineTrace {
  std::vector<double> objective;  // steps + 1 values, exact L1, starting at R = 0
  FlowField residual;
  FlowField refined_flow;         // flow + residual
};

/// Adam on R from zero. Confidence stays fixed and source neighborhoods are
/// computed once (and not at all when lambda_flow is 0, so k_f < n is only
/// required with a smoothness term). Throws NumericalDivergence on a
/// non-finite objective or gradient.
RefineTrace refine(const PointCloud& x, const PointCloud& y, const FlowField& flow,
                   std::span<const double> confidence, const RefineConfig& cfg);

}  // namespace scoopflow
