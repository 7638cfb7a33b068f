#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "cloud.hpp"
#include "matrix.hpp"

namespace scoopflow {

/// One feature row per point (n x d).
using FeatureMatrix = RowMatrix;

/// Point coordinates minus the cloud centroid (d = 3).
struct XyzCentered {};

/// Centered coordinates followed by the sum-normalized, nonincreasing
/// eigenvalues of the covariance of the k_geo nearest points, the point
/// itself included (d = 6).
struct LocalPca {
  std::size_t k_geo = 16;
};

/// Feature rows exported by an external model, returned verbatim.
struct Precomputed {
  FeatureMatrix rows;
};

using FeatureProvider = std::variant<XyzCentered, LocalPca, Precomputed>;

FeatureMatrix extract_features(const FeatureProvider& provider, const PointCloud& cloud);

/// Throws DegenerateFeature on a zero or non-finite row.
void check_features(const FeatureMatrix& features, const char* what);

/// Pairwise cosine similarity with a Euclidean distance gate.
///
/// The matching cost is 1 - similarity. Pairs at distance >= gate radius are
/// flagged in `gated` and take no part in transport.
struct CostMatrix {
  RowMatrix similarity;
  MaskMatrix gated;

  std::size_t rows() const { return static_cast<std::size_t>(similarity.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(similarity.cols()); }
  double cost(std::size_t i, std::size_t j) const { return 1.0 - similarity(i, j); }

  /// True when source row i has no target inside the gate.
  bool row_fully_gated(std::size_t i) const;
};

inline constexpr double kDefaultGateRadius = 10.0;

CostMatrix cost_matrix(const FeatureMatrix& fx, const FeatureMatrix& fy,
                       const PointCloud& x, const PointCloud& y,
                       double gate_radius = kDefaultGateRadius);

// "SFF1" feature files: u32 n, u32 d, then n*d little-endian float32.
FeatureMatrix load_features(const std::string& path);
void save_features(const std::string& path, const FeatureMatrix& features);

}  // namespace scoopflow
