#include "transport.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"

namespace scoopflow {

void TransportConfig::validate() const {
  if (!(epsilon > 0.0) || !(epsilon_offset >= 0.0) || !(effective_epsilon() > 0.0) ||
      !std::isfinite(effective_epsilon())) {
    fail(ErrorCode::InvalidInput, "transport: epsilon must be positive and epsilon_offset nonnegative");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidInput, "transport: lambda must be positive");
  if (iterations < 1) fail(ErrorCode::InvalidInput, "transport: iterations must be >= 1");
}

TransportPlan sinkhorn(const CostMatrix& cost, const TransportConfig& cfg) {
  cfg.validate();
  const Eigen::Index ns = cost.similarity.rows(), nt = cost.similarity.cols();
  if (ns == 0 || nt == 0) fail(ErrorCode::InvalidInput, "transport: empty cost matrix");

  const double eps = cfg.effective_epsilon();
  const double power = cfg.lambda / (cfg.lambda + eps);

  RowMatrix kernel(ns, nt);
  std::vector<bool> row_open(ns, false), col_open(nt, false);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      if (cost.gated(i, j)) {
        kernel(i, j) = 0.0;
      } else {
        kernel(i, j) = std::exp(-(1.0 - cost.similarity(i, j)) / eps);
        row_open[i] = col_open[j] = true;
      }
    }
  }

  const double row_mass = 1.0 / static_cast<double>(ns);
  const double col_mass = 1.0 / static_cast<double>(nt);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(ns, row_mass);
  Eigen::VectorXd b(nt);
  for (Eigen::Index i = 0; i < ns; ++i) {
    if (!row_open[i]) a[i] = 0.0;
  }

  for (int m = 0; m < cfg.iterations; ++m) {
    const Eigen::VectorXd col_sums = kernel.transpose() * a;
    for (Eigen::Index j = 0; j < nt; ++j) {
      if (!col_open[j]) {
        b[j] = 0.0;
        continue;
      }
      if (!(col_sums[j] > 0.0)) {
        fail(ErrorCode::DegenerateTransport, "transport: column " + std::to_string(j) +
                                                 " has zero mass at iteration " + std::to_string(m));
      }
      b[j] = std::pow(col_mass / col_sums[j], power);
      if (!std::isfinite(b[j])) {
        fail(ErrorCode::DegenerateTransport, "transport: column " + std::to_string(j) + " scaling overflowed");
      }
    }
    const Eigen::VectorXd row_sums = kernel * b;
    for (Eigen::Index i = 0; i < ns; ++i) {
      if (!row_open[i]) continue;
      if (!(row_sums[i] > 0.0)) {
        fail(ErrorCode::DegenerateTransport, "transport: row " + std::to_string(i) +
                                                 " has zero mass at iteration " + std::to_string(m));
      }
      a[i] = std::pow(row_mass / row_sums[i], power);
      if (!std::isfinite(a[i])) {
        fail(ErrorCode::DegenerateTransport, "transport: row " + std::to_string(i) + " scaling overflowed");
      }
    }
  }

  TransportPlan plan{a.asDiagonal() * kernel * b.asDiagonal()};
  for (Eigen::Index i = 0; i < ns; ++i) {
    if (!row_open[i]) plan.mass.row(i).setConstant(row_mass * col_mass);
  }
  if (!plan.mass.allFinite()) fail(ErrorCode::DegenerateTransport, "transport: non-finite plan entries");
  return plan;
}

Marginals marginals(const TransportPlan& plan) {
  return {plan.mass.rowwise().sum(), plan.mass.colwise().sum().transpose()};
}

}  // namespace scoopflow
