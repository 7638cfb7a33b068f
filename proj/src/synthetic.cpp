#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "error.hpp"

namespace scoopflow {

namespace {

std::vector<Vec3> sample_shape(const SyntheticSceneSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<Vec3> pts(spec.points);
  const Vec3 half = spec.extent / 2.0;
  switch (spec.shape) {
    case ShapeKind::UniformBox:
      for (auto& p : pts) p = Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(spec.extent);
      break;
    case ShapeKind::Planes:
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3 u = Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(spec.extent);
        switch (i % 3) {
          case 0: pts[i] = Vec3(u.x(), u.y(), -half.z()); break;  // ground
          case 1: pts[i] = Vec3(half.x(), u.y(), u.z()); break;   // wall facing -x
          default: pts[i] = Vec3(u.x(), half.y(), u.z()); break;  // wall facing -y
        }
      }
      break;
    case ShapeKind::ClusteredBlobs: {
      constexpr std::size_t kBlobs = 6;
      std::vector<Vec3> centers(kBlobs);
      for (auto& c : centers) c = Vec3(unit(rng), unit(rng), unit(rng)).cwiseProduct(spec.extent);
      std::normal_distribution<double> spread(0.0, 0.1 * spec.extent.minCoeff());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = centers[i % kBlobs] + Vec3(spread(rng), spread(rng), spread(rng));
      }
      break;
    }
  }
  return pts;
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (points == 0) fail(ErrorCode::InvalidInput, "synthetic: point count must be positive");
  if (!(extent.array() > 0.0).all()) fail(ErrorCode::InvalidInput, "synthetic: extent must be positive");
  if (!(occlusion >= 0.0 && occlusion < 1.0)) fail(ErrorCode::InvalidInput, "synthetic: occlusion must lie in [0, 1)");
  if (!(jitter_sigma >= 0.0)) fail(ErrorCode::InvalidInput, "synthetic: jitter sigma must be nonnegative");
  if (!std::isfinite(rotation_deg) || !translation.allFinite()) {
    fail(ErrorCode::InvalidInput, "synthetic: motion must be finite");
  }
}

SyntheticScene generate_synthetic(const SyntheticSceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::vector<Vec3> source = sample_shape(spec, rng);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
  if (axis.norm() == 0.0) axis = Vec3::UnitZ();
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(spec.rotation_deg * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : source) centroid += p;
  centroid /= static_cast<double>(source.size());

  FlowField gt(source.size());
  std::vector<Vec3> moved(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    // Written as a displacement so zero motion and pure translation are exact.
    const Vec3 offset = source[i] - centroid;
    gt[i] = (rot * offset - offset) + spec.translation;
    moved[i] = source[i] + gt[i];
    if (spec.jitter_sigma > 0.0) {
      moved[i] += spec.jitter_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
  }

  const auto removed = static_cast<std::size_t>(std::llround(spec.occlusion * static_cast<double>(source.size())));
  if (removed >= source.size()) fail(ErrorCode::InvalidInput, "synthetic: occlusion leaves an empty target");
  std::vector<Vec3> target = moved;
  if (removed > 0) {
    std::vector<std::size_t> order(source.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < removed; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<bool> drop(source.size(), false);
    for (std::size_t i = 0; i < removed; ++i) drop[order[i]] = true;
    target.clear();
    for (std::size_t i = 0; i < moved.size(); ++i) {
      if (!drop[i]) target.push_back(moved[i]);
    }
  }
  return {PointCloud(source, std::move(gt)), PointCloud(std::move(target))};
}

}  // namespace scoopflow
