#include "flowinit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace scoopflow {

TopK top_k_weights(const TransportPlan& plan, const CorrespondenceConfig& cfg) {
  const auto ns = static_cast<std::size_t>(plan.mass.rows());
  const auto nt = static_cast<std::size_t>(plan.mass.cols());
  if (cfg.k_s == 0 || cfg.k_s > nt) {
    fail(ErrorCode::InvalidInput,
         "k_s=" + std::to_string(cfg.k_s) + " outside [1, n_t=" + std::to_string(nt) + "]");
  }
  const std::size_t k = cfg.k_s;
  TopK out{k, std::vector<std::size_t>(ns * k), std::vector<double>(ns * k)};

  std::vector<std::size_t> order(nt);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto row = plan.mass.row(static_cast<Eigen::Index>(i));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double ma = row[static_cast<Eigen::Index>(a)];
                        const double mb = row[static_cast<Eigen::Index>(b)];
                        return ma > mb || (ma == mb && a < b);
                      });
    // Shifting by the largest selected mass leaves the softmax unchanged.
    const double top = row[static_cast<Eigen::Index>(order[0])];
    double total = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      const double e = std::exp(row[static_cast<Eigen::Index>(order[l])] - top);
      out.indices[i * k + l] = order[l];
      out.weights[i * k + l] = e;
      total += e;
    }
    for (std::size_t l = 0; l < k; ++l) out.weights[i * k + l] /= total;
  }
  return out;
}

std::vector<Vec3> soft_correspondence(const PointCloud& y, const TopK& selection) {
  std::vector<Vec3> out(selection.rows(), Vec3::Zero());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto idx = selection.index_row(i);
    const auto w = selection.weight_row(i);
    for (std::size_t l = 0; l < selection.k; ++l) {
      if (idx[l] >= y.size()) fail(ErrorCode::InvalidInput, "soft_correspondence: target index out of range");
      out[i] += w[l] * y[idx[l]];
    }
  }
  return out;
}

FlowField initial_flow(const PointCloud& x, std::span<const Vec3> soft_targets) {
  if (soft_targets.size() != x.size()) fail(ErrorCode::ShapeMismatch, "initial_flow: soft target count differs from source");
  FlowField flow(x.size());
  for (std::size_t i = 0; i < flow.size(); ++i) flow[i] = soft_targets[i] - x[i];
  return flow;
}

std::vector<double> confidence(const CostMatrix& cost, const TopK& selection) {
  if (selection.rows() != cost.rows()) fail(ErrorCode::ShapeMismatch, "confidence: selection rows differ from cost rows");
  std::vector<double> p(selection.rows(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (cost.row_fully_gated(i)) continue;
    const auto idx = selection.index_row(i);
    const auto w = selection.weight_row(i);
    double s = 0.0;
    for (std::size_t l = 0; l < selection.k; ++l) {
      s += w[l] * cost.similarity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx[l]));
    }
    p[i] = std::clamp(s, 0.0, 1.0);
  }
  return p;
}

CorrespondenceResult correspond(const PointCloud& x, const PointCloud& y, const CostMatrix& cost,
                                const TransportPlan& plan, const CorrespondenceConfig& cfg) {
  CorrespondenceResult out;
  out.selection = top_k_weights(plan, cfg);
  out.soft_targets = soft_correspondence(y, out.selection);
  out.confidence = confidence(cost, out.selection);
  out.initial_flow = initial_flow(x, out.soft_targets);
  return out;
}

}  // namespace scoopflow
