#include "refine.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace scoopflow {

namespace {

void check_inputs(const PointCloud& x, const FlowField& flow, const FlowField& residual,
                  std::span<const double> confidence, const NeighborGraph& neighbors, const RefineConfig& cfg) {
  check_flow(flow, x.size(), "refine flow");
  check_flow(residual, x.size(), "refine residual");
  if (confidence.size() != x.size()) fail(ErrorCode::ShapeMismatch, "refine: confidence length differs from source");
  if (cfg.lambda_flow != 0.0 && neighbors.rows() != x.size()) {
    fail(ErrorCode::ShapeMismatch, "refine: neighbor graph size differs from source");
  }
}

std::vector<Vec3> moved_points(const PointCloud& x, const FlowField& flow, const FlowField& residual) {
  std::vector<Vec3> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + flow[i] + residual[i];
  return out;
}

double smooth_abs(double t, double delta) { return std::sqrt(t * t + delta * delta); }

double smoothness_term(const FlowField& flow, const FlowField& residual, const NeighborGraph& neighbors,
                       L1Mode l1, double delta) {
  double sum = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const Vec3 gi = flow[i] + residual[i];
    for (auto l : neighbors.row(i)) {
      const Vec3 d = gi - (flow[l] + residual[l]);
      for (int c = 0; c < 3; ++c) sum += l1 == L1Mode::Exact ? std::abs(d[c]) : smooth_abs(d[c], delta);
    }
  }
  return sum / (static_cast<double>(flow.size()) * static_cast<double>(neighbors.k));
}

}  // namespace

void RefineConfig::validate() const {
  if (!(lambda_flow >= 0.0)) fail(ErrorCode::InvalidInput, "refine: lambda_flow must be nonnegative");
  if (k_f == 0) fail(ErrorCode::InvalidInput, "refine: k_f must be positive");
  if (!(update_rate > 0.0)) fail(ErrorCode::InvalidInput, "refine: update_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::InvalidInput, "refine: beta1 and beta2 must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) fail(ErrorCode::InvalidInput, "refine: adam_epsilon must be positive");
  if (!(smoothness_delta > 0.0)) fail(ErrorCode::InvalidInput, "refine: smoothness_delta must be positive");
}

double refine_objective(const PointCloud& x, const FlowField& flow, const FlowField& residual,
                        std::span<const double> confidence, const NeighborIndex& target,
                        const NeighborGraph& neighbors, const RefineConfig& cfg, L1Mode l1) {
  check_inputs(x, flow, residual, confidence, neighbors, cfg);
  const auto moved = moved_points(x, flow, residual);
  const double dist = cfg.distance_mode == DistanceMode::Chamfer
                          ? chamfer_loss(moved, target.points())
                          : confidence_distance_loss(moved, confidence, target);
  if (cfg.lambda_flow == 0.0) return dist;
  return dist + cfg.lambda_flow * smoothness_term(flow, residual, neighbors, l1, cfg.smoothness_delta);
}

FlowField refine_gradient(const PointCloud& x, const FlowField& flow, const FlowField& residual,
                          std::span<const double> confidence, const NeighborIndex& target,
                          const NeighborGraph& neighbors, const RefineConfig& cfg) {
  check_inputs(x, flow, residual, confidence, neighbors, cfg);
  const std::size_t n = x.size();
  const auto moved = moved_points(x, flow, residual);
  FlowField grad(n, Vec3::Zero());

  if (cfg.distance_mode == DistanceMode::Chamfer) {
    const double fwd = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] += fwd * (moved[i] - target.point(target.nearest(moved[i]).index));
    }
    const NeighborIndex moved_index(moved);
    const double bwd = 2.0 / static_cast<double>(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) {
      const std::size_t i = moved_index.nearest(target.point(j)).index;
      grad[i] += bwd * (moved[i] - target.point(j));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (confidence[i] == 0.0) continue;
      const Vec3& y = target.point(target.nearest(moved[i]).index);
      grad[i] += (2.0 * confidence[i] / static_cast<double>(n)) * (moved[i] - y);
    }
  }

  if (cfg.lambda_flow != 0.0) {
    const double scale = cfg.lambda_flow / (static_cast<double>(n) * static_cast<double>(neighbors.k));
    const double delta = cfg.smoothness_delta;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 gi = flow[i] + residual[i];
      for (auto l : neighbors.row(i)) {
        const Vec3 d = gi - (flow[l] + residual[l]);
        Vec3 s;
        for (int c = 0; c < 3; ++c) s[c] = d[c] / smooth_abs(d[c], delta);
        grad[i] += scale * s;
        grad[l] -= scale * s;
      }
    }
  }
  return grad;
}

RefineTrace refine(const PointCloud& x, const PointCloud& y, const FlowField& flow,
                   std::span<const double> confidence, const RefineConfig& cfg) {
  cfg.validate();
  check_flow(flow, x.size(), "refine flow");
  const NeighborIndex target(y.points());
  // Neighborhoods only feed the smoothness term.
  const NeighborGraph neighbors = cfg.lambda_flow != 0.0 ? self_excluded_neighbors(x, cfg.k_f) : NeighborGraph{};

  const std::size_t n = x.size();
  FlowField residual(n, Vec3::Zero()), m(n, Vec3::Zero()), v(n, Vec3::Zero());
  RefineTrace trace;
  trace.objective.reserve(cfg.steps + 1);

  auto record = [&](std::size_t step) {
    const double value = refine_objective(x, flow, residual, confidence, target, neighbors, cfg);
    if (!std::isfinite(value)) {
      fail(ErrorCode::NumericalDivergence, "refine: non-finite objective at step " + std::to_string(step));
    }
    trace.objective.push_back(value);
  };

  record(0);
  double beta1_pow = 1.0, beta2_pow = 1.0;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const FlowField grad = refine_gradient(x, flow, residual, confidence, target, neighbors, cfg);
    if (!all_finite(grad)) {
      fail(ErrorCode::NumericalDivergence, "refine: non-finite gradient at step " + std::to_string(step));
    }
    beta1_pow *= cfg.beta1;
    beta2_pow *= cfg.beta2;
    const double step_size = cfg.update_rate / (1.0 - beta1_pow);
    const double v_correction = 1.0 / (1.0 - beta2_pow);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i].cwiseProduct(grad[i]);
      const Vec3 denom = (v[i] * v_correction).cwiseSqrt().array() + cfg.adam_epsilon;
      residual[i] -= step_size * m[i].cwiseQuotient(denom);
    }
    record(step);
  }

  trace.refined_flow.resize(n);
  for (std::size_t i = 0; i < n; ++i) trace.refined_flow[i] = flow[i] + residual[i];
  trace.residual = std::move(residual);
  return trace;
}

}  // namespace scoopflow
