#include "eval.hpp"

#include <limits>
#include <string>

#include "error.hpp"

namespace scoopflow {

PointErrors point_errors(const FlowField& pred, const FlowField& gt) {
  if (pred.size() != gt.size()) {
    fail(ErrorCode::ShapeMismatch, "point_errors: " + std::to_string(pred.size()) + " predictions vs " +
                                       std::to_string(gt.size()) + " ground-truth vectors");
  }
  PointErrors out{std::vector<double>(pred.size()), std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = (pred[i] - gt[i]).norm();
    const double g = gt[i].norm();
    out.abs[i] = e;
    if (g > 0.0) out.rel[i] = e / g;
    else out.rel[i] = e > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return out;
}

MetricReport metrics(const PointErrors& errors) {
  const std::size_t n = errors.abs.size();
  if (n == 0) fail(ErrorCode::InvalidInput, "metrics: no points to evaluate");
  if (errors.rel.size() != n) fail(ErrorCode::ShapeMismatch, "metrics: error arrays differ in length");
  double sum = 0.0;
  std::size_t strict = 0, relaxed = 0, outliers = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = errors.abs[i], r = errors.rel[i];
    sum += e;
    if (e < 0.05 || r < 0.05) ++strict;
    if (e < 0.1 || r < 0.1) ++relaxed;
    if (e > 0.3 || r > 0.1) ++outliers;
  }
  const double pct = 100.0 / static_cast<double>(n);
  return {sum / static_cast<double>(n), static_cast<double>(strict) * pct,
          static_cast<double>(relaxed) * pct, static_cast<double>(outliers) * pct, n};
}

MetricReport metrics(const FlowField& pred, const FlowField& gt) {
  return metrics(point_errors(pred, gt));
}

}  // namespace scoopflow
