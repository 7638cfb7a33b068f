#pragma once

#include <cstddef>
#include <vector>

#include "cloud.hpp"

namespace scoopflow {

struct PointErrors {
  std::vector<double> abs;  // |pred - gt|
  std::vector<double> rel;  // abs / |gt|; +inf when |gt| = 0 < abs, 0 when both vanish
};

PointErrors point_errors(const FlowField& pred, const FlowField& gt);

struct MetricReport {
  double epe = 0.0;      // meters
  double as_pct = 0.0;   // e < 0.05 or e_rel < 0.05
  double ar_pct = 0.0;   // e < 0.1 or e_rel < 0.1
  double out_pct = 0.0;  // e > 0.3 or e_rel > 0.1
  std::size_t n_evaluated = 0;
};

MetricReport metrics(const PointErrors& errors);
MetricReport metrics(const FlowField& pred, const FlowField& gt);

}  // namespace scoopflow
