#pragma once

#include <Eigen/Core>

#include "features.hpp"
#include "matrix.hpp"

namespace scoopflow {

struct TransportConfig {
  double epsilon = 0.03;        // entropic regularizer
  double lambda = 10.0;         // marginal relaxation weight
  int iterations = 1;           // scaling rounds M
  double epsilon_offset = 0.0;  // added to epsilon before use

  double effective_epsilon() const { return epsilon + epsilon_offset; }
  void validate() const;
};

/// Nonnegative n_s x n_t mass matrix.
struct TransportPlan {
  RowMatrix mass;
};

/// Relaxed entropic transport by unbalanced Sinkhorn scaling.
///
/// Starts from exp(-C/eps) with zeros on gated pairs, then alternates column
/// and row scalings raised to lambda / (lambda + eps) against uniform
/// marginals 1/n_t and 1/n_s. Rows with every pair gated bypass the solve and
/// spread 1/n_s uniformly over all targets; columns with every pair gated get
/// zero scaling. Any other zero row or column sum raises DegenerateTransport.
TransportPlan sinkhorn(const CostMatrix& cost, const TransportConfig& cfg);

struct Marginals {
  Eigen::VectorXd rows;
  Eigen::VectorXd cols;
};

Marginals marginals(const TransportPlan& plan);

}  // namespace scoopflow
