#include "features.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "binary_io.hpp"
#include "error.hpp"
#include "kdtree.hpp"

namespace scoopflow {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

FeatureMatrix centered_coordinates(const PointCloud& cloud, Eigen::Index cols) {
  const Vec3 c = cloud.centroid();
  FeatureMatrix out(static_cast<Eigen::Index>(cloud.size()), cols);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)).head<3>() = (cloud[i] - c).transpose();
  }
  return out;
}

FeatureMatrix local_pca(const PointCloud& cloud, std::size_t k_geo) {
  if (k_geo == 0 || k_geo > cloud.size()) {
    fail(ErrorCode::InvalidInput, "LocalPca needs 1 <= k_geo <= n (k_geo=" +
                                      std::to_string(k_geo) + ", n=" + std::to_string(cloud.size()) + ")");
  }
  FeatureMatrix out = centered_coordinates(cloud, 6);
  const NeighborIndex index(cloud.points());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.knn(cloud[i], k_geo);
    Vec3 mean = Vec3::Zero();
    for (const auto& nb : nbrs) mean += cloud[nb.index];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nbrs) {
      const Vec3 d = cloud[nb.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov, Eigen::EigenvaluesOnly);
    // Ascending from the solver; clamp round-off below zero.
    Vec3 ev = solver.eigenvalues().reverse().cwiseMax(0.0);
    const double sum = ev.sum();
    ev = sum > 0.0 ? Vec3(ev / sum) : Vec3::Constant(1.0 / 3.0);
    out.row(static_cast<Eigen::Index>(i)).tail<3>() = ev.transpose();
  }
  return out;
}

}  // namespace

void check_features(const FeatureMatrix& features, const char* what) {
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    if (!row.allFinite()) {
      fail(ErrorCode::DegenerateFeature, std::string(what) + ": non-finite feature row " + std::to_string(i));
    }
    if (row.squaredNorm() == 0.0) {
      fail(ErrorCode::DegenerateFeature, std::string(what) + ": zero-norm feature row " + std::to_string(i));
    }
  }
}

FeatureMatrix extract_features(const FeatureProvider& provider, const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorCode::InvalidInput, "cannot extract features of an empty cloud");
  FeatureMatrix out = std::visit(
      Overloaded{
          [&](const XyzCentered&) { return centered_coordinates(cloud, 3); },
          [&](const LocalPca& p) { return local_pca(cloud, p.k_geo); },
          [&](const Precomputed& p) {
            if (static_cast<std::size_t>(p.rows.rows()) != cloud.size()) {
              fail(ErrorCode::ShapeMismatch, "precomputed features have " + std::to_string(p.rows.rows()) +
                                                 " rows for a cloud of " + std::to_string(cloud.size()));
            }
            return p.rows;
          },
      },
      provider);
  check_features(out, "extract_features");
  return out;
}

bool CostMatrix::row_fully_gated(std::size_t i) const {
  return (gated.row(static_cast<Eigen::Index>(i)).array() != 0).all();
}

CostMatrix cost_matrix(const FeatureMatrix& fx, const FeatureMatrix& fy,
                       const PointCloud& x, const PointCloud& y, double gate_radius) {
  if (static_cast<std::size_t>(fx.rows()) != x.size() || static_cast<std::size_t>(fy.rows()) != y.size()) {
    fail(ErrorCode::ShapeMismatch, "feature rows do not match cloud sizes");
  }
  if (fx.cols() != fy.cols()) fail(ErrorCode::ShapeMismatch, "source and target feature dimensions differ");
  if (!(gate_radius > 0.0)) fail(ErrorCode::InvalidInput, "gate radius must be positive");
  check_features(fx, "cost_matrix source");
  check_features(fy, "cost_matrix target");

  const RowMatrix ux = fx.rowwise().normalized();
  const RowMatrix uy = fy.rowwise().normalized();

  CostMatrix out;
  out.similarity = (ux * uy.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  out.gated.resize(fx.rows(), fy.rows());
  const double r2 = gate_radius * gate_radius;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      out.gated(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (x[i] - y[j]).squaredNorm() >= r2 ? 1 : 0;
    }
  }
  return out;
}

FeatureMatrix load_features(const std::string& path) {
  using detail::read_le;
  const std::string bytes = detail::read_file(path);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12) throw ParseError(bytes.size(), path + ": SFF header truncated");
  if (bytes.compare(0, 4, "SFF1") != 0) throw ParseError(0, path + ": bad SFF magic");
  const auto n = read_le<std::uint32_t>(data + 4);
  const auto d = read_le<std::uint32_t>(data + 8);
  if (n == 0 || d == 0) throw ParseError(4, path + ": SFF shape must be nonzero");
  const std::size_t payload = std::size_t{n} * d * 4;
  if (bytes.size() - 12 < payload) throw ParseError(bytes.size(), path + ": SFF payload truncated");
  if (bytes.size() - 12 > payload) throw ParseError(12 + payload, path + ": trailing bytes after SFF payload");
  FeatureMatrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t off = 12 + (i * d + j) * 4;
      const double v = read_le<float>(data + off);
      if (!std::isfinite(v)) throw ParseError(off, path + ": non-finite feature value");
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

void save_features(const std::string& path, const FeatureMatrix& features) {
  using detail::append_le;
  std::string out = "SFF1";
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.rows()));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) append_le<float>(out, static_cast<float>(features(i, j)));
  }
  detail::write_file_atomic(path, out);
}

}  // namespace scoopflow
